import json
import math

import numpy as np
import pytest

import mrflearn.oracle as oracle
from mrflearn.oracle import (
    exact_poly_risk,
    exact_risk,
    median_failure_rate,
    monte_carlo_risk,
    product_distribution,
    verify_anticoncentration,
    verify_l1_recovery,
    verify_linf_recovery,
    verify_maximal_monomial_tail,
    verify_median_claim,
    verify_sigmoid_gap,
)
from mrflearn.polynomials import MultilinearPoly, sigmoid
from mrflearn._rng import make_rng

from conftest import load_schema


class TestExactRisk:
    def test_identical_predictors(self):
        dist = product_distribution([0.5, 0.5, 0.5])
        w = np.array([0.2, -0.1, 0.0])
        assert exact_risk(dist, w, 0.3, w, 0.3) == 0.0

    def test_one_dimensional_value(self):
        # flat truth against a +-1 linear form under a uniform spin
        dist = product_distribution([0.5])
        risk = exact_risk(dist, np.zeros(1), 0.0, np.ones(1), 0.0)
        expected = ((sigmoid(1.0) - 0.5) ** 2 + (sigmoid(-1.0) - 0.5) ** 2) / 2
        assert risk == pytest.approx(expected, abs=1e-15)
        assert risk == pytest.approx(0.0534, abs=5e-5)

    def test_symmetric_in_swap(self, rng):
        dist = product_distribution(rng.uniform(0.2, 0.8, size=4))
        w, v = rng.normal(size=4), rng.normal(size=4)
        a, b = 0.1, -0.2
        assert exact_risk(dist, w, a, v, b) == pytest.approx(
            exact_risk(dist, v, b, w, a), abs=1e-15
        )

    def test_recovery_report_gaps(self):
        from mrflearn.oracle import recovery_report

        dist = product_distribution([0.5, 0.5])
        w = np.array([0.3, -0.1])
        v = np.array([0.5, -0.1])
        rep = recovery_report(dist, w, 0.0, v, 0.25)
        assert rep.method == "exact"
        assert rep.linf_gap == pytest.approx(0.25)
        assert rep.l1_gap == pytest.approx(0.45)
        assert rep.risk > 0.0

    def test_against_monte_carlo(self, rng):
        # uniform spins: enumeration and sampling must agree to 3 SEs
        n = 5
        w = rng.uniform(-0.5, 0.5, size=n)
        v = w + rng.uniform(-0.2, 0.2, size=n)
        dist = product_distribution(np.full(n, 0.5))
        exact = exact_risk(dist, w, 0.0, v, 0.1)
        rep = monte_carlo_risk(w, 0.0, v, 0.1, n, N=1_000_000, seed=2)
        se = rep.ci / 2.576
        assert abs(rep.risk - exact) <= 3 * se + 1e-12


class TestSigmoidGap:
    def test_equal_arguments(self):
        a = 1.3
        assert abs(sigmoid(a) - sigmoid(a)) == 0.0
        assert math.exp(-abs(a) - 3) * min(1.0, 0.0) == 0.0

    def test_specific_pair(self):
        lhs = sigmoid(1.0) - sigmoid(0.0)
        rhs = math.exp(-3.0)
        assert lhs == pytest.approx(0.2311, abs=1e-4)
        assert lhs >= rhs

    def test_full_grid_passes(self):
        report = verify_sigmoid_gap()
        assert report.passed
        assert report.summary["worst_slack"] >= -1e-12
        assert report.summary["grid_points"] == 2001


class TestLinfRecovery:
    def test_identical_vectors_trivial(self):
        dist = product_distribution([0.4, 0.6])
        w = np.array([0.3, -0.2])
        assert exact_risk(dist, w, 0.1, w, 0.1) == 0.0

    def test_worked_example(self):
        # uniform spins on three sites, truth 0.3 x0 against 0.5 x0
        dist = product_distribution([0.5, 0.5, 0.5])
        w = np.array([0.3, 0.0, 0.0])
        v = np.array([0.5, 0.0, 0.0])
        risk = exact_risk(dist, w, 0.0, v, 0.0)
        assert risk == pytest.approx((sigmoid(0.5) - sigmoid(0.3)) ** 2, abs=1e-15)
        assert risk == pytest.approx(0.0023056, abs=1e-6)
        bound = 21.0 * math.exp(0.3) * math.sqrt(risk / 0.5)
        assert bound > 0.2  # comfortably above the actual gap

    def test_seeded_trials_pass(self):
        report = verify_linf_recovery(trials=200, seed=0)
        assert report.passed
        assert report.summary["qualifying"] >= 100
        assert report.summary["worst_gap_over_bound"] <= 1.0


class TestAnticoncentration:
    def test_single_variable_uniform(self):
        dist = product_distribution([0.5])
        s = MultilinearPoly(1, 1, {(0,): 1.0})
        vals = np.abs(s.evaluate_many(dist.states.astype(float)))
        prob = float(dist.probs[vals >= 1.0].sum())
        assert prob == 1.0 >= 0.5

    def test_seeded_trials_pass(self):
        report = verify_anticoncentration(trials=500, seed=0)
        assert report.passed
        assert report.summary["trials"] >= 450
        assert report.summary["worst_slack"] >= -1e-12


class TestMaximalMonomialTail:
    def test_identical_polynomials_zero_lhs(self):
        dist = product_distribution([0.5, 0.5, 0.5])
        p = MultilinearPoly(3, 2, {(0, 1): 0.5})
        X = dist.states.astype(float)
        dq = p.partial_derivative((0, 1)).evaluate_many(X)
        lhs = float(dist.probs[np.abs(p.coeff((0, 1)) - dq) > 0.1].sum())
        assert lhs == 0.0

    def test_seeded_trials_pass(self):
        report = verify_maximal_monomial_tail(trials=500, seed=0)
        assert report.passed
        assert report.summary["checked_bounds"] >= 200


class TestL1Recovery:
    def test_identical_polynomials(self):
        dist = product_distribution([0.5, 0.5, 0.5, 0.5])
        p = MultilinearPoly(4, 2, {(0, 1): 0.4})
        assert exact_poly_risk(dist, p, p) == 0.0

    def test_seeded_trials_pass(self):
        report = verify_l1_recovery(trials=500, seed=0)
        assert report.passed
        assert report.summary["qualifying"] >= 300
        assert report.summary["worst_gap_over_bound"] <= 1.0

    def test_degree_one_cross_check(self):
        # affine case: both the coordinatewise bound and the degree-descent
        # l1 bound must hold on the same qualifying instances
        rng = make_rng(5, 44)
        for _ in range(50):
            n = 4
            delta = 0.3
            dist = product_distribution(rng.uniform(delta, 1 - delta, size=n))
            w = np.zeros(n)
            w[0] = rng.uniform(-0.3, 0.3)
            threshold = math.exp(-2 * np.abs(w).sum() - 6) * delta
            pert = rng.uniform(-1, 1, size=n)
            pert *= 2.0 * math.sqrt(threshold) / np.abs(pert).sum()
            v = w + pert
            risk = exact_risk(dist, w, 0.0, v, 0.0)
            if risk >= threshold:
                continue
            linf = float(np.max(np.abs(v - w)))
            l1 = float(np.sum(np.abs(v - w)))
            linf_bound = 21.0 * math.exp(np.abs(w).sum()) * math.sqrt(risk / delta)
            l1_bound = 4 * math.exp(np.abs(w).sum() + 3) * math.sqrt(risk / delta) * n
            assert linf <= linf_bound + 1e-12
            assert l1 <= l1_bound + 1e-12
            assert l1_bound >= linf_bound  # the degree recurrence is looser


class TestMedianClaim:
    def test_no_outliers_never_fails(self):
        rng = make_rng(1, 45)
        assert median_failure_rate(0.0, 11, 1000, rng) == 0.0

    def test_reference_point(self):
        rng = make_rng(2, 45)
        rate = median_failure_rate(0.2, 51, 10_000, rng)
        assert rate <= 2 * math.exp(-51 * 0.09)

    def test_even_count_rejected(self):
        rng = make_rng(3, 45)
        with pytest.raises(ValueError):
            median_failure_rate(0.1, 10, 100, rng)

    def test_seeded_trials_pass(self):
        report = verify_median_claim(trials=200, seed=0)
        assert report.passed


class TestReports:
    def test_json_lines_schema(self):
        import jsonschema

        schema = load_schema("report_line.schema.json")
        report = verify_linf_recovery(trials=5, seed=3)
        lines = report.to_json_lines().strip().split("\n")
        assert len(lines) == 6
        for line in lines:
            jsonschema.validate(json.loads(line), schema)

    def test_determinism(self):
        a = verify_anticoncentration(trials=50, seed=9).to_json_lines()
        b = verify_anticoncentration(trials=50, seed=9).to_json_lines()
        assert a == b

    def test_run_suites_unknown_name(self):
        with pytest.raises(ValueError):
            oracle.run_suites(["nope"])

    def test_zero_trials_smoke(self):
        for name in oracle.ALL_SUITES:
            if name == "sigmoid":
                continue
            rep = oracle.ALL_SUITES[name](0, 0)
            assert rep.passed
            json.loads(rep.to_json_lines().strip().split("\n")[-1])
