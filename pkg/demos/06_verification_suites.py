"""Run the brute-force verification layer and print its findings.

Each suite checks one inequality the learners rely on, by exact
enumeration on seeded random instances, and reports the worst slack it
observed against the explicit audited constant.
"""

import mrflearn.oracle as oracle

suites = [
    ("sigmoid gap lower bound", lambda: oracle.verify_sigmoid_gap()),
    ("risk to entrywise recovery", lambda: oracle.verify_linf_recovery(trials=200, seed=0)),
    ("polynomial anti-concentration", lambda: oracle.verify_anticoncentration(trials=500, seed=0)),
    ("maximal-coefficient tail bound", lambda: oracle.verify_maximal_monomial_tail(trials=500, seed=0)),
    ("risk to coefficient-sum recovery", lambda: oracle.verify_l1_recovery(trials=500, seed=0)),
    ("median boosting", lambda: oracle.verify_median_claim(trials=200, seed=0)),
]

for label, run in suites:
    report = run()
    status = "pass" if report.passed else "FAIL"
    print(f"{label:36s} {status}")
    for key, value in report.summary.items():
        print(f"    {key} = {value}")
