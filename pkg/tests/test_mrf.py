import math

import numpy as np
import pytest

import mrflearn as ml
from mrflearn.ising import learn_row
from mrflearn.mrf import (
    MrfConfig,
    MrfModel,
    default_median_count,
    expand_batch,
    expand_example,
    l1_guarantee_report,
    learn_derivative_poly,
    learn_parameters,
    learn_structure,
    median_coefficient,
)
from mrflearn.polynomials import MultilinearPoly, sigmoid

from conftest import brute_conditional_minus, pm1_states, random_ising, random_mrf


def triangle_model(weight=0.6, n=6):
    return MrfModel(n=n, t=3, psi=MultilinearPoly(n, 3, {(0, 1, 2): weight}))


class TestModel:
    def test_edges_cover_monomials(self):
        m = MrfModel(4, 3, MultilinearPoly(4, 3, {(0, 1, 2): 1.0, (3,): 0.5}))
        assert m.edges == [(0, 1), (0, 2), (1, 2)]

    def test_width(self):
        m = triangle_model(0.6)
        assert m.width == pytest.approx(0.6)

    def test_degree_check(self):
        with pytest.raises(ValueError):
            MrfModel(4, 2, MultilinearPoly(4, 3, {(0, 1, 2): 1.0}))

    def test_json_round_trip(self):
        m = triangle_model()
        back = MrfModel.from_json_dict(m.to_json_dict())
        assert back.psi == m.psi and back.n == m.n and back.t == m.t


class TestConditional:
    def test_zero_interaction(self):
        m = MrfModel(3, 2, MultilinearPoly(3, 2))
        assert m.conditional_minus(1, [1, -1]) == 0.5

    def test_triple_interaction(self):
        m = MrfModel(3, 3, MultilinearPoly(3, 3, {(0, 1, 2): 0.5}))
        assert m.conditional_minus(0, [1, 1]) == pytest.approx(sigmoid(-1.0), abs=1e-15)

    def test_matches_enumeration(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 7))
            t = int(rng.integers(1, min(3, n) + 1))
            m = random_mrf(rng, n, t)
            for i in range(n):
                for x in pm1_states(n - 1):
                    assert m.conditional_minus(i, x) == pytest.approx(
                        brute_conditional_minus(m, i, x), abs=1e-12
                    )

    def test_t2_matches_ising(self, rng):
        # a degree-2 interaction polynomial is exactly a coupled spin model
        for _ in range(5):
            n = 6
            ising = random_ising(rng, n)
            coeffs = {(i,): ising.theta[i] for i in range(n) if ising.theta[i]}
            for i in range(n):
                for j in range(i + 1, n):
                    if ising.A[i, j]:
                        coeffs[(i, j)] = ising.A[i, j]
            m = MrfModel(n, 2, MultilinearPoly(n, 2, coeffs))
            for i in range(n):
                x = rng.choice([-1.0, 1.0], size=n - 1)
                assert m.conditional_minus(i, x) == pytest.approx(
                    ising.conditional_minus(i, x), abs=1e-12
                )

    def test_conditional_sums_to_one(self, rng):
        m = random_mrf(rng, 5, 3)
        x = rng.choice([-1.0, 1.0], size=4)
        p_minus = m.conditional_minus(2, x)
        full_minus = np.insert(x, 2, -1.0)
        full_plus = np.insert(x, 2, 1.0)
        ratio = math.exp(m.log_mass(full_plus) - m.log_mass(full_minus))
        assert p_minus * (1 + ratio) == pytest.approx(1.0, abs=1e-9)

    def test_unbiasedness_bound(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 7))
            m = random_mrf(rng, n, min(3, n))
            delta = ml.delta_unbiasedness(m)
            assert delta >= 0.5 * math.exp(-2.0 * m.width) - 1e-12


class TestExpansion:
    def test_example(self):
        feats, label = expand_example(np.array([1, -1, 1, -1]), 3, 2)
        assert feats.tolist() == [1.0, 1.0, -1.0, 1.0]
        assert label == 1.0

    def test_degree_one(self):
        feats, label = expand_example(np.array([1, -1, 1]), 0, 1)
        assert feats.tolist() == [1.0]
        assert label == 0.0

    def test_feature_count(self):
        feats, _ = expand_example(np.ones(4, dtype=np.int8), 0, 3)
        assert feats.size == 1 + 3 + 3

    def test_batch_matches_single(self, rng):
        rows = rng.choice([-1, 1], size=(50, 5)).astype(np.int8)
        F, Y = expand_batch(rows, 2, 3)
        for r in range(50):
            feats, label = expand_example(rows[r], 2, 3)
            assert np.allclose(F[r], feats, atol=0)
            assert Y[r] == label


class TestDerivativeLearning:
    def test_zero_model(self):
        m = MrfModel(5, 2, MultilinearPoly(5, 2))
        batch = ml.exact_sample(ml.exact_distribution(m), 40_000, seed=3)
        q, diag = learn_derivative_poly(batch, 0, MrfConfig(lam=0.3, t=2))
        assert q.l1_norm <= 0.1

    def test_triangle_coefficient(self):
        model = triangle_model()
        batch = ml.exact_sample(ml.exact_distribution(model), 1_000_000, seed=4)
        cfg = MrfConfig(lam=0.6, t=3, eta=0.3)
        q0, _ = learn_derivative_poly(batch, 0, cfg)
        assert abs(q0.coeff((1, 2)) - 0.6) <= 0.15

    def test_t2_agrees_with_ising_row(self, rng):
        model = random_ising(rng, 5, scale=0.3)
        batch = ml.exact_sample(ml.exact_distribution(model), 20_000, seed=6)
        res = learn_row(batch, 2, lam=0.8)
        q, _ = learn_derivative_poly(batch, 2, MrfConfig(lam=0.8, t=2))
        # the derivative polynomial's singleton coefficients are the couplings
        for j in range(5):
            if j != 2:
                assert q.coeff((j,)) == pytest.approx(res.row[j], abs=1e-9)
        assert q.coeff(()) == pytest.approx(res.theta, abs=1e-9)


class TestMedian:
    def test_constant_polynomial(self, rng):
        q = MultilinearPoly(3, 1, {(1,): 2.5})
        rows = rng.choice([-1.0, 1.0], size=(7, 3))
        assert median_coefficient(q, (1,), rows) == 2.5

    def test_median_robust_to_outlier(self):
        # derivative values over the three fresh rows are 1, 2, 100
        q = MultilinearPoly(4, 2, {(1,): 51.0, (1, 2): -49.5, (1, 3): -0.5})
        rows = np.array(
            [
                [1, 1, 1, 1],
                [1, 1, 1, -1],
                [1, 1, -1, 1],
            ],
            dtype=np.float64,
        )
        vals = q.partial_derivative((1,)).evaluate_many(rows)
        assert sorted(vals.tolist()) == [1.0, 2.0, 100.0]
        assert median_coefficient(q, (1,), rows) == 2.0

    def test_triangle_median_concentrates(self):
        # top-degree derivative medians land within eta/4 of the truth
        model = triangle_model()
        dist = ml.exact_distribution(model)
        cfg = MrfConfig(lam=0.6, t=3, eta=0.3)
        K = 721
        hits = 0
        for seed in range(5):
            batch = ml.exact_sample(dist, 1_000_000, seed=7000 + seed)
            q0, _ = learn_derivative_poly(batch.rows[:-K], 0, cfg)
            med = median_coefficient(q0, (1, 2), batch.rows[-K:].astype(np.float64))
            hits += abs(med - 0.6) <= 0.075
        assert hits >= 4

    def test_even_count_rejected(self, rng):
        q = MultilinearPoly(3, 1, {(1,): 1.0})
        with pytest.raises(ValueError):
            median_coefficient(q, (1,), rng.choice([-1.0, 1.0], size=(6, 3)))

    def test_default_count_odd(self):
        for n, t, rho in [(6, 3, 0.05), (10, 2, 0.1), (3, 1, 0.5)]:
            K = default_median_count(n, t, rho)
            assert K % 2 == 1 and K >= 1


class TestStructure:
    def test_zero_model(self):
        m = MrfModel(5, 2, MultilinearPoly(5, 2))
        batch = ml.exact_sample(ml.exact_distribution(m), 50_000, seed=8)
        assert learn_structure(batch, MrfConfig(lam=0.3, t=2, eta=0.3)) == []

    def test_two_disjoint_edges(self):
        psi = MultilinearPoly(6, 2, {(0, 1): 0.5, (2, 3): 0.5})
        m = MrfModel(6, 2, psi)
        batch = ml.exact_sample(ml.exact_distribution(m), 300_000, seed=9)
        assert learn_structure(batch, MrfConfig(lam=0.5, t=2, eta=0.3)) == [(0, 1), (2, 3)]

    def test_triangle(self):
        model = triangle_model()
        batch = ml.exact_sample(ml.exact_distribution(model), 1_000_000, seed=10)
        edges = learn_structure(batch, MrfConfig(lam=0.6, t=3, eta=0.3))
        assert edges == [(0, 1), (0, 2), (1, 2)]

    def test_eta_required(self):
        with pytest.raises(ValueError):
            learn_structure(np.ones((10, 3), dtype=np.int8), MrfConfig(lam=0.5, t=2))

    def test_median_block_shortfall(self):
        cfg = MrfConfig(lam=0.5, t=2, eta=0.3, K=101)
        with pytest.raises(ml.SampleShortfallError):
            learn_structure(np.ones((50, 3), dtype=np.int8), cfg)

    def test_success_monotone_in_samples(self):
        # success rate over repeated draws must not degrade as N grows
        model = triangle_model()
        dist = ml.exact_distribution(model)
        cfg = MrfConfig(lam=0.6, t=3, eta=0.3)
        truth = [(0, 1), (0, 2), (1, 2)]
        rates = []
        for idx, N in enumerate([6_000, 40_000, 400_000]):
            wins = 0
            for trial in range(15):
                batch = ml.exact_sample(dist, N, seed=9000 + 100 * idx + trial)
                wins += learn_structure(batch, cfg) == truth
            rates.append(wins)
        assert rates[0] <= rates[1] + 1 and rates[1] <= rates[2] + 1
        assert rates[2] >= rates[0]


class TestParameters:
    def test_zero_model_l1(self):
        m = MrfModel(4, 2, MultilinearPoly(4, 2))
        batch = ml.exact_sample(ml.exact_distribution(m), 60_000, seed=11)
        q, _ = learn_parameters(batch, MrfConfig(lam=0.3, t=2, eps=0.1))
        assert q.l1_norm <= 0.1 * math.comb(4, 2)

    def test_single_edge_coefficient(self):
        psi = MultilinearPoly(4, 2, {(0, 1): 0.5})
        m = MrfModel(4, 2, psi)
        batch = ml.exact_sample(ml.exact_distribution(m), 200_000, seed=12)
        q, _ = learn_parameters(batch, MrfConfig(lam=0.5, t=2, eps=0.1))
        assert abs(q.coeff((0, 1)) - 0.5) <= 0.1

    def test_constant_term_zero(self):
        psi = MultilinearPoly(3, 2, {(0, 1): 0.4})
        m = MrfModel(3, 2, psi)
        batch = ml.exact_sample(ml.exact_distribution(m), 20_000, seed=13)
        q, _ = learn_parameters(batch, MrfConfig(lam=0.4, t=2))
        assert q.coeff(()) == 0.0

    def test_pointwise_density_ratio(self):
        # coefficient-sum error below 0.05 pins every state's probability
        # ratio inside [0.89, 1.11]
        psi = MultilinearPoly(4, 2, {(0, 1): 0.5})
        model = MrfModel(4, 2, psi)
        dist = ml.exact_distribution(model)
        batch = ml.exact_sample(dist, 1_000_000, seed=14)
        q, _ = learn_parameters(batch, MrfConfig(lam=0.5, t=2, eps=0.05))
        l1 = sum(abs(psi.coeff(m_) - q.coeff(m_)) for m_ in set(psi.coeffs) | set(q.coeffs))
        assert l1 <= 0.05
        X = dist.states.astype(np.float64)
        p_norm = np.exp(psi.evaluate_many(X))
        p_norm /= p_norm.sum()
        q_norm = np.exp(q.evaluate_many(X))
        q_norm /= q_norm.sum()
        ratio = p_norm / q_norm
        assert ratio.min() >= 0.89 and ratio.max() <= 1.11
        assert np.max(np.abs(np.exp(psi.evaluate_many(X) - q.evaluate_many(X)) - 1)) <= 0.11


class TestL1GuaranteeReport:
    def test_identical_polynomials(self):
        psi = MultilinearPoly(4, 2, {(0, 1): 0.4})
        dist = ml.exact_distribution(MrfModel(4, 2, psi))
        report = l1_guarantee_report(psi, psi, dist)
        assert report["risk"] == 0.0 and report["l1_gap"] == 0.0 and report["ok"]

    def test_small_perturbation_obeys_bound(self):
        psi = MultilinearPoly(4, 2, {(0, 1): 0.4, (2,): -0.2})
        q = MultilinearPoly(4, 2, {(0, 1): 0.401, (2,): -0.2005})
        dist = ml.exact_distribution(MrfModel(4, 2, psi))
        report = l1_guarantee_report(psi, q, dist)
        assert report["precondition_ok"] and report["ok"]
