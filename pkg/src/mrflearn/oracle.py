"""Brute-force numeric verification of the recovery guarantees.

Every learner in this package rests on a handful of closed-form
inequalities: a lower bound on sigmoid gaps, anti-concentration of
multilinear polynomials under unbiased distributions, tail and l1
bounds converting small squared-sigmoid risk into coefficient accuracy,
and the boosting power of medians.  Each verify_* routine instantiates
one inequality with explicit constants and checks it on seeded random
instances small enough to evaluate by exact enumeration, reporting the
worst observed slack.

Constants are taken from the explicit intermediate steps of the
derivations (e.g. the e^3 factor in the l-infinity bound, 2^{t+1} t^t
from the degree recurrence), not tuned to make trials pass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .polynomials import MultilinearPoly, enumerate_monomials, sigmoid
from .samplers import ExactDistribution, state_table

# The l-infinity recovery chain gives |w_i - v_i| <= e^{||w||_1+|a|+3} sqrt(eps/delta);
# e^3 = 20.09 is rounded up to an integer constant.
LINF_CONSTANT = 21.0

# Median failure bound 2 exp(-K (1/2 - p)^2): a Chernoff-style exponent
# with explicit constant 1 (Hoeffding gives exponent 2, so this has slack).
MEDIAN_EXPONENT = 1.0

_FLOAT_SLACK = 1e-9


def _finite(x):
    """JSON-safe: infinities (empty sweeps) become None."""
    return None if x is None or math.isinf(x) else x


@dataclass
class RiskReport:
    """Squared-transfer risk between two affine predictors."""

    risk: float
    method: str
    ci: float | None = None
    linf_gap: float | None = None
    l1_gap: float | None = None


@dataclass
class VerificationReport:
    """Outcome of one verify_* sweep: per-trial records plus a summary."""

    name: str
    seed: int
    passed: bool
    trials: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_json_lines(self) -> str:
        lines = [json.dumps({"trial": i, **t}) for i, t in enumerate(self.trials)]
        lines.append(
            json.dumps(
                {"summary": self.name, "seed": self.seed, "passed": self.passed, **self.summary}
            )
        )
        return "\n".join(lines) + "\n"


def product_distribution(marginals_plus) -> ExactDistribution:
    """Independent spins with P[x_i = +1] = marginals_plus[i]."""
    p = np.asarray(marginals_plus, dtype=np.float64)
    n = p.shape[0]
    states = state_table(n, 2)
    probs = np.ones(states.shape[0])
    for i in range(n):
        probs *= np.where(states[:, i] == 1, p[i], 1.0 - p[i])
    return ExactDistribution(n=n, k=2, states=states, probs=probs)


def exact_risk(dist: ExactDistribution, w_true, bias_true, v, bias_v, u=sigmoid) -> float:
    """E[(u(v.X + bias_v) - u(w.X + bias_true))^2] by enumeration."""
    X = dist.states.astype(np.float64)
    a = u(X @ np.asarray(w_true, dtype=np.float64) + bias_true)
    b = u(X @ np.asarray(v, dtype=np.float64) + bias_v)
    return float(np.sum(dist.probs * (a - b) ** 2))


def recovery_report(dist: ExactDistribution, w_true, bias_true, v, bias_v, u=sigmoid) -> RiskReport:
    """Exact risk between two affine predictors plus their weight gaps."""
    w_true = np.asarray(w_true, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    gap = np.append(v - w_true, bias_v - bias_true)
    return RiskReport(
        risk=exact_risk(dist, w_true, bias_true, v, bias_v, u=u),
        method="exact",
        linf_gap=float(np.max(np.abs(gap))),
        l1_gap=float(np.sum(np.abs(gap))),
    )


def monte_carlo_risk(w_true, bias_true, v, bias_v, n, N=1_000_000, seed=0, u=sigmoid) -> RiskReport:
    """Risk under uniform +-1 inputs, estimated from N fresh draws.

    The reported ci is a 99% normal-approximation half-width.
    """
    rng = make_rng(seed, 99)
    gaps = np.empty(N)
    chunk = 1 << 18
    done = 0
    acc = 0.0
    while done < N:
        m = min(chunk, N - done)
        X = rng.integers(0, 2, size=(m, n)).astype(np.float64) * 2.0 - 1.0
        g = (u(X @ v + bias_v) - u(X @ w_true + bias_true)) ** 2
        gaps[done : done + m] = g
        done += m
    risk = float(np.mean(gaps))
    ci = 2.576 * float(np.std(gaps)) / math.sqrt(N)
    return RiskReport(risk=risk, method=f"monte_carlo(N={N})", ci=ci)


def exact_poly_risk(dist: ExactDistribution, p: MultilinearPoly, q: MultilinearPoly) -> float:
    """E[(sigmoid(p(X)) - sigmoid(q(X)))^2] by enumeration."""
    X = dist.states.astype(np.float64)
    a = sigmoid(p.evaluate_many(X))
    b = sigmoid(q.evaluate_many(X))
    return float(np.sum(dist.probs * (a - b) ** 2))


# ----------------------------------------------------------------------
# verification sweeps
# ----------------------------------------------------------------------


def verify_sigmoid_gap(lo=-10.0, hi=10.0, step=0.01) -> VerificationReport:
    """Grid check of |s(a) - s(b)| >= e^{-|a|-3} min(1, |a-b|)."""
    grid = np.arange(lo, hi + step / 2, step)
    worst = math.inf
    worst_pair = (0.0, 0.0)
    sig = sigmoid(grid)
    for start in range(0, grid.size, 512):
        a = grid[start : start + 512][:, None]
        sa = sig[start : start + 512][:, None]
        lhs = np.abs(sa - sig[None, :])
        rhs = np.exp(-np.abs(a) - 3.0) * np.minimum(1.0, np.abs(a - grid[None, :]))
        slack = lhs - rhs
        idx = np.unravel_index(np.argmin(slack), slack.shape)
        if slack[idx] < worst:
            worst = float(slack[idx])
            worst_pair = (float(a[idx[0], 0]), float(grid[idx[1]]))
    passed = worst >= -1e-12
    return VerificationReport(
        name="sigmoid_gap",
        seed=0,
        passed=passed,
        trials=[],
        summary={
            "grid_points": int(grid.size),
            "worst_slack": _finite(worst),
            "worst_pair": list(worst_pair),
        },
    )


def _random_sparse_poly(rng, n, t, n_terms, scale, allow_constant=True):
    monos = enumerate_monomials(n, t)
    if not allow_constant:
        monos = [m for m in monos if m]
    take = min(n_terms, len(monos))
    picks = rng.choice(len(monos), size=take, replace=False)
    coeffs = {}
    for idx in picks:
        coeffs[monos[int(idx)]] = scale * float(rng.uniform(0.2, 1.0)) * (
            1.0 if rng.random() < 0.5 else -1.0
        )
    return MultilinearPoly(n, t, coeffs)


def verify_linf_recovery(trials=200, seed=0) -> VerificationReport:
    """Random affine pairs: small exact risk under an unbiased product
    distribution forces coordinatewise closeness.

    Whenever risk < delta exp(-2||w||_1 - 2|a| - 6), asserts
    ||v - w||_inf <= 21 e^{||w||_1 + |a|} sqrt(risk / delta); trials that
    miss the risk precondition count as vacuously passing.
    """
    rng = make_rng(seed, 41)
    records = []
    passed = True
    worst_ratio = 0.0
    qualifying = 0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        delta = float(rng.uniform(0.05, 0.45))
        marginals = rng.uniform(delta, 1.0 - delta, size=n)
        dist = product_distribution(marginals)
        w = np.zeros(n)
        support = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        w[support] = rng.uniform(-0.4, 0.4, size=support.size)
        alpha = float(rng.uniform(-0.4, 0.4))
        threshold = delta * math.exp(-2 * np.abs(w).sum() - 2 * abs(alpha) - 6)
        # perturbation sized so the risk precondition usually holds
        scale = 4.0 * math.sqrt(threshold) * float(rng.uniform(0.05, 0.9))
        pert = rng.uniform(-1.0, 1.0, size=n + 1)
        pert *= scale / max(np.abs(pert).sum(), 1e-12)
        v = w + pert[:n]
        beta = alpha + float(pert[n])
        risk = exact_risk(dist, w, alpha, v, beta)
        qualifies = risk < threshold
        record = {
            "n": n,
            "delta": delta,
            "l1_w": float(np.abs(w).sum()),
            "risk": risk,
            "qualifies": bool(qualifies),
        }
        if qualifies:
            qualifying += 1
            gap = float(np.max(np.abs(v - w)))
            bound = LINF_CONSTANT * math.exp(np.abs(w).sum() + abs(alpha)) * math.sqrt(risk / delta)
            ok = gap <= bound + _FLOAT_SLACK
            record.update({"linf_gap": gap, "bound": bound, "ok": bool(ok)})
            worst_ratio = max(worst_ratio, gap / bound if bound > 0 else 0.0)
            passed = passed and ok
        records.append(record)
    return VerificationReport(
        name="linf_recovery",
        seed=seed,
        passed=passed,
        trials=records,
        summary={
            "trials": trials,
            "qualifying": qualifying,
            "worst_gap_over_bound": worst_ratio,
            "constant": LINF_CONSTANT,
        },
    )


def verify_anticoncentration(trials=500, seed=0) -> VerificationReport:
    """P[|s(X)| >= |coefficient of a maximal monomial I|] >= delta^{|I|}
    for every nonempty maximal monomial, under unbiased product
    distributions; checked by enumeration."""
    rng = make_rng(seed, 42)
    records = []
    passed = True
    worst = math.inf
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        t = int(rng.integers(1, min(3, n) + 1))
        delta = float(rng.uniform(0.05, 0.5))
        marginals = rng.uniform(delta, 1.0 - delta, size=n)
        dist = product_distribution(marginals)
        s = _random_sparse_poly(
            rng, n, t, n_terms=int(rng.integers(1, 7)), scale=1.0, allow_constant=False
        )
        if not len(s):
            continue
        vals = np.abs(s.evaluate_many(dist.states.astype(np.float64)))
        ok = True
        min_slack = math.inf
        for I in s.maximal_monomials():
            if not I:
                continue
            level = abs(s.coeff(I)) * (1.0 - 1e-12)
            prob = float(np.sum(dist.probs[vals >= level]))
            slack = prob - delta ** len(I)
            min_slack = min(min_slack, slack)
            if slack < -1e-12:
                ok = False
        records.append(
            {"n": n, "t": t, "delta": delta, "terms": len(s), "min_slack": min_slack, "ok": ok}
        )
        worst = min(worst, min_slack)
        passed = passed and ok
    return VerificationReport(
        name="anticoncentration",
        seed=seed,
        passed=passed,
        trials=records,
        summary={"trials": len(records), "worst_slack": _finite(worst)},
    )


def verify_maximal_monomial_tail(trials=500, seed=0) -> VerificationReport:
    """Tail bound linking a maximal coefficient of p to the derivative of
    q: P[|p_hat(I) - d_I q(X)| > r] <= e^{2||p||_1+6} risk / (r^2 delta^{|I|});
    both sides computed exactly."""
    rng = make_rng(seed, 43)
    records = []
    passed = True
    worst_margin = math.inf
    vacuous = 0
    checked = 0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        t = int(rng.integers(1, min(3, n) + 1))
        delta = float(rng.uniform(0.1, 0.5))
        marginals = rng.uniform(delta, 1.0 - delta, size=n)
        dist = product_distribution(marginals)
        p = _random_sparse_poly(rng, n, t, n_terms=int(rng.integers(1, 6)), scale=0.6)
        pert = _random_sparse_poly(
            rng, n, t, n_terms=int(rng.integers(1, 5)),
            scale=float(rng.choice([0.0005, 0.005, 0.05, 0.2])) * float(rng.uniform(0.5, 1.0)),
        )
        q_coeffs = dict(p.coeffs)
        for mono, c in pert.coeffs.items():
            q_coeffs[mono] = q_coeffs.get(mono, 0.0) + c
        q = MultilinearPoly(n, t, q_coeffs)
        eps = exact_poly_risk(dist, p, q)
        rho = float(rng.uniform(0.02, 0.5))
        X = dist.states.astype(np.float64)
        ok = True
        min_margin = math.inf
        for I in p.maximal_monomials():
            if not I:
                continue
            rhs = math.exp(2 * p.l1_norm + 6) * eps / (rho**2 * delta ** len(I))
            if rhs >= 1.0:
                vacuous += 1
                continue
            checked += 1
            dq = q.partial_derivative(I).evaluate_many(X)
            lhs = float(np.sum(dist.probs[np.abs(p.coeff(I) - dq) > rho]))
            margin = rhs - lhs
            min_margin = min(min_margin, margin)
            if lhs > rhs + _FLOAT_SLACK:
                ok = False
        records.append({"n": n, "t": t, "risk": eps, "rho": rho, "min_margin": min_margin, "ok": ok})
        worst_margin = min(worst_margin, min_margin)
        passed = passed and ok
    return VerificationReport(
        name="maximal_monomial_tail",
        seed=seed,
        passed=passed,
        trials=records,
        summary={
            "trials": len(records),
            "checked_bounds": checked,
            "vacuous_bounds": vacuous,
            "worst_margin": _finite(worst_margin),
        },
    )


def poly_l1_bound_report(p: MultilinearPoly, q: MultilinearPoly, dist: ExactDistribution, delta=None) -> dict:
    """Evaluate the risk-to-l1 bound for one polynomial pair.

    With t the larger degree bound and delta the distribution's
    unbiasedness, small exact risk forces
    ||p - q||_1 <= 2^{t+1} t^t e^{||p||_1 + 3} sqrt(risk / delta^t) C(n, t),
    provided risk < e^{-2||p||_1 - 6} delta^t.
    """
    if delta is None:
        grid = dist.probs.reshape((2,) * dist.n)
        delta = 1.0
        for i in range(dist.n):
            denom = grid.sum(axis=i, keepdims=True)
            delta = min(delta, float(np.min(grid / denom)))
    t = max(p.t, q.t, 1)
    risk = exact_poly_risk(dist, p, q)
    l1 = MultilinearPoly(
        p.n,
        t,
        {
            m: p.coeff(m) - q.coeff(m)
            for m in set(p.coeffs) | set(q.coeffs)
        },
    ).l1_norm
    precondition = risk < math.exp(-2 * p.l1_norm - 6) * delta**t
    bound = (
        2 ** (t + 1)
        * t**t
        * math.exp(p.l1_norm + 3)
        * math.sqrt(risk / delta**t)
        * math.comb(p.n, t)
    )
    return {
        "risk": risk,
        "l1_gap": l1,
        "delta": delta,
        "t": t,
        "precondition_ok": bool(precondition),
        "bound": bound,
        "ok": bool((not precondition) or l1 <= bound + _FLOAT_SLACK),
    }


def verify_l1_recovery(trials=500, seed=0) -> VerificationReport:
    """Small exact risk forces small coefficient-vector l1 distance, with
    the explicit 2^{t+1} t^t constant from the degree-descent recurrence."""
    rng = make_rng(seed, 44)
    records = []
    passed = True
    worst_ratio = 0.0
    qualifying = 0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        t = int(rng.integers(1, max(2, n // 2 + 1)))
        delta = float(rng.uniform(0.2, 0.5))
        marginals = rng.uniform(delta, 1.0 - delta, size=n)
        dist = product_distribution(marginals)
        p = _random_sparse_poly(rng, n, t, n_terms=int(rng.integers(1, 5)), scale=0.3)
        threshold = math.exp(-2 * p.l1_norm - 6) * delta**t
        pert_scale = 4.0 * math.sqrt(threshold) * float(rng.uniform(0.05, 0.9))
        pert = _random_sparse_poly(rng, n, t, n_terms=int(rng.integers(1, 5)), scale=1.0)
        if len(pert):
            factor = pert_scale / pert.l1_norm
            pert = MultilinearPoly(n, t, {m: c * factor for m, c in pert.coeffs.items()})
        q_coeffs = dict(p.coeffs)
        for mono, c in pert.coeffs.items():
            q_coeffs[mono] = q_coeffs.get(mono, 0.0) + c
        q = MultilinearPoly(n, t, q_coeffs)
        report = poly_l1_bound_report(p, q, dist, delta=delta)
        record = {"n": n, "t": t, "delta": delta, **report}
        if report["precondition_ok"]:
            qualifying += 1
            if report["bound"] > 0:
                worst_ratio = max(worst_ratio, report["l1_gap"] / report["bound"])
            passed = passed and report["ok"]
        records.append(record)
    return VerificationReport(
        name="l1_recovery",
        seed=seed,
        passed=passed,
        trials=records,
        summary={
            "trials": trials,
            "qualifying": qualifying,
            "worst_gap_over_bound": worst_ratio,
        },
    )


def median_failure_rate(p, K, reps, rng, gamma=0.25) -> float:
    """Empirical P[|median of K draws - center| > gamma] for a two-point
    distribution putting mass p on an outlier beyond gamma."""
    if K < 1 or K % 2 == 0:
        raise ValueError(f"median sample count must be odd, got {K}")
    outlier = rng.random((reps, K)) < p
    signs = np.where(rng.random((reps, K)) < 0.5, -1.0, 1.0)
    draws = np.where(outlier, signs * 2.0 * gamma, 0.0)
    med = np.median(draws, axis=1)
    return float(np.mean(np.abs(med) > gamma))


def verify_median_claim(trials=200, seed=0, reps=10_000) -> VerificationReport:
    """Medians of K independent draws stay within gamma of the center
    with failure probability at most 2 exp(-K (1/2 - p)^2) whenever a
    single draw leaves the window with probability p < 1/4."""
    rng = make_rng(seed, 45)
    records = []
    passed = True
    worst_margin = math.inf
    for _ in range(trials):
        p = float(rng.uniform(0.0, 0.24))
        K = 2 * int(rng.integers(5, 51)) + 1
        rate = median_failure_rate(p, K, reps, rng)
        bound = 2.0 * math.exp(-MEDIAN_EXPONENT * K * (0.5 - p) ** 2)
        ok = rate <= bound
        worst_margin = min(worst_margin, bound - rate)
        passed = passed and ok
        records.append({"p": p, "K": K, "rate": rate, "bound": bound, "ok": ok})
    return VerificationReport(
        name="median_claim",
        seed=seed,
        passed=passed,
        trials=records,
        summary={"trials": trials, "reps": reps, "worst_margin": _finite(worst_margin)},
    )


ALL_SUITES = {
    "sigmoid": lambda seed, trials: verify_sigmoid_gap(),
    "linf": lambda seed, trials: verify_linf_recovery(trials=trials, seed=seed),
    "anticonc": lambda seed, trials: verify_anticoncentration(trials=trials, seed=seed),
    "tail": lambda seed, trials: verify_maximal_monomial_tail(trials=trials, seed=seed),
    "l1": lambda seed, trials: verify_l1_recovery(trials=trials, seed=seed),
    "median": lambda seed, trials: verify_median_claim(trials=trials, seed=seed),
}


def run_suites(names, seed=0, trials=200) -> list[VerificationReport]:
    reports = []
    for name in names:
        if name not in ALL_SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(ALL_SUITES)}")
        reports.append(ALL_SUITES[name](seed, trials))
    return reports
