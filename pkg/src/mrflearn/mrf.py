"""Higher-order binary Markov random fields.

A model is a log-polynomial density on {-1,+1}^n: the unnormalized mass
of a state z is exp(psi(z)) for an interaction polynomial psi of degree
at most t, and the dependency graph connects every pair of variables
appearing together in a nonzero monomial.

The conditional law of one variable given the rest is a logistic
function of the site's derivative polynomial, so each d_i psi is
learnable as a sparse GLM over monomial features of the other variables
(degree <= t-1).  Structure recovery thresholds medians of the learned
derivative polynomial's coefficient estimates over fresh samples;
parameter recovery stitches the per-site polynomials together.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .polynomials import MultilinearPoly, enumerate_monomials, sigmoid
from .sparsitron import SampleShortfallError, SparsitronConfig, sparsitron_learn


@dataclass(frozen=True)
class MrfModel:
    """Interaction polynomial psi of degree <= t on n binary variables."""

    n: int
    t: int
    psi: MultilinearPoly

    def __post_init__(self):
        if self.psi.n != self.n:
            raise ValueError("psi dimension must match n")
        if max((len(m) for m in self.psi.coeffs), default=0) > self.t:
            raise ValueError(f"psi has monomials above degree t={self.t}")

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Pairs covered by some nonzero monomial of psi."""
        found = set()
        for mono in self.psi.coeffs:
            for pair in itertools.combinations(mono, 2):
                found.add(pair)
        return sorted(found)

    @property
    def width(self) -> float:
        """max_i ||d_i psi||_1, the conditioning parameter."""
        if self.n == 0:
            return 0.0
        return max(self.psi.partial_derivative((i,)).l1_norm for i in range(self.n))

    def log_mass(self, z) -> float:
        return self.psi.evaluate(z)

    def log_mass_many(self, Z) -> np.ndarray:
        return self.psi.evaluate_many(Z)

    def conditional_minus(self, i, x_rest) -> float:
        """P[Z_i = -1 | Z_{-i} = x_rest]: sigmoid(-2 d_i psi at x_rest)."""
        x_rest = np.asarray(x_rest, dtype=np.float64)
        if x_rest.shape != (self.n - 1,):
            raise ValueError(f"expected {self.n - 1} conditioning values")
        full = np.insert(x_rest, i, 0.0)  # position i never read by d_i psi
        return float(sigmoid(-2.0 * self.psi.partial_derivative((i,)).evaluate(full)))

    def conditional_minus_many(self, i, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        vals = self.psi.partial_derivative((i,)).evaluate_many(Z)
        return sigmoid(-2.0 * vals)

    def to_json_dict(self) -> dict:
        d = self.psi.to_json_dict()
        d["n"] = self.n
        d["t"] = self.t
        return d

    @classmethod
    def from_json_dict(cls, d) -> "MrfModel":
        return cls(n=d["n"], t=d["t"], psi=MultilinearPoly.from_json_dict(d))


@dataclass(frozen=True)
class MrfConfig:
    """Knobs for structure and parameter recovery.

    lam bounds max_i ||d_i psi||_1; eta is the identifiability threshold
    (every maximal monomial coefficient at least eta in magnitude); K is
    the fresh-sample count for median estimates (odd; defaulted from
    (n, t, rho) when omitted); gamma overrides the internal risk target
    reported in diagnostics.
    """

    lam: float
    t: int
    eta: float = 0.0
    rho: float = 0.05
    K: int | None = None
    gamma: float | None = None
    eps: float = 0.1
    holdout_frac: float = 0.2
    holdout_cap: int = 10_000
    max_candidates: int = 128
    median_constant: float = 25.0
    threads: int = 1

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.K is not None and self.K % 2 == 0:
            raise ValueError("K must be odd")


def default_median_count(n, t, rho, constant=25.0) -> int:
    """Odd fresh-sample count 2*ceil(constant * t * ln(n/rho)) + 1."""
    return 2 * math.ceil(constant * t * math.log(max(n, 2) / rho)) + 1


def structure_gamma(lam, eta, t) -> float:
    """Internal risk target for structure recovery at threshold eta."""
    delta = math.exp(-2.0 * lam) / 2.0
    return math.exp(-2.0 * lam - 6.0) * eta**2 * delta**t / 64.0


def parameter_gamma(lam, eps, t, exponent=12.0, divisor=100.0) -> float:
    """Internal risk target for coefficient recovery to accuracy eps."""
    return eps**2 * math.exp(-exponent * lam * t) / ((2 * t) ** (2 * t) * divisor)


def reduced_monomials(n, t) -> list[tuple[int, ...]]:
    """Feature monomials over the n-1 conditioning variables, degree <= t-1."""
    return enumerate_monomials(n - 1, t - 1)


def expand_example(z, i, t) -> tuple[np.ndarray, float]:
    """Feature vector of monomial evaluations of z_{-i}, plus the label.

    Features follow the canonical (size, lex) order of subsets of the
    reduced index space [n-1] (reduced index j names original variable j
    if j < i else j+1).  The label is (1 - z_i)/2 in {0, 1}.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    others = np.delete(z, i)
    feats = np.array(
        [np.prod(others[list(m)]) if m else 1.0 for m in reduced_monomials(n, t)]
    )
    return feats, float((1.0 - z[i]) / 2.0)


def expand_batch(rows, i, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized expand_example over an (N, n) sample block.

    Feature columns are built incrementally: the column for a monomial
    is the column of its size-minus-one prefix times one variable, so
    each feature costs a single elementwise multiply.
    """
    rows = np.asarray(rows)
    N, n = rows.shape
    monos = reduced_monomials(n, t)
    col_of = {mono: col for col, mono in enumerate(monos)}
    F = np.empty((N, len(monos)))
    for col, mono in enumerate(monos):
        if not mono:
            F[:, col] = 1.0
        elif len(mono) == 1:
            orig = mono[0] if mono[0] < i else mono[0] + 1
            F[:, col] = rows[:, orig]
        else:
            np.multiply(
                F[:, col_of[mono[:-1]]], F[:, col_of[(mono[-1],)]], out=F[:, col]
            )
    return F, (1.0 - rows[:, i]) / 2.0


def _as_rows(samples) -> np.ndarray:
    rows = getattr(samples, "rows", samples)
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError("samples must be an (N, n) array of +-1 values")
    return rows


def _split_counts(N, cfg):
    if N < 2:
        raise SampleShortfallError(
            f"need at least 2 samples, got {N}", required=2, available=N
        )
    M = min(max(1, int(cfg.holdout_frac * N)), cfg.holdout_cap, N - 1)
    return N - M, M


def learn_derivative_poly(samples, i, cfg: MrfConfig):
    """Estimate d_i psi as a polynomial of degree <= t-1 over the others.

    Runs the sparse GLM learner on expanded features with l1 bound
    2*lam and maps the learned weights v back via coefficient -v_I / 2.
    Returns (poly, diagnostics); the polynomial lives on all n variables
    but never mentions variable i.
    """
    rows = _as_rows(samples)
    N, n = rows.shape
    T, M = _split_counts(N, cfg)
    F, Y = expand_batch(rows, i, cfg.t)
    run_cfg = SparsitronConfig(
        lam=2.0 * cfg.lam, T=T, M=M, max_candidates=cfg.max_candidates
    )
    result = sparsitron_learn((F, Y), run_cfg, validate=False)

    monos = reduced_monomials(n, cfg.t)
    coeffs = {}
    for mono, v_val in zip(monos, result.v_signed):
        original = tuple(j if j < i else j + 1 for j in mono)
        coeffs[original] = -0.5 * float(v_val)
    poly = MultilinearPoly(n, max(0, cfg.t - 1), coeffs)

    gamma = cfg.gamma
    if gamma is None:
        gamma = (
            structure_gamma(cfg.lam, cfg.eta, cfg.t)
            if cfg.eta > 0
            else parameter_gamma(cfg.lam, cfg.eps, cfg.t)
        )
    d = 2 * len(monos) + 1
    theory = SparsitronConfig.for_accuracy(
        2.0 * cfg.lam, d, min(max(gamma, 1e-300), 0.999), cfg.rho / max(n, 1)
    )
    diagnostics = {
        "vertex": i,
        "samples": int(N),
        "train_steps": int(T),
        "holdout": int(M),
        "holdout_risk": result.risk,
        "chosen_step": result.step,
        "gamma_target": gamma,
        "theory_train_steps": theory.T,
        "theory_holdout": theory.M,
    }
    return poly, diagnostics


def median_coefficient(q_i, indices, fresh_rows) -> float:
    """Median over fresh samples of the derivative of q_i along indices.

    The sample count must be odd so the median is itself an evaluation,
    keeping the estimate robust to a minority of bad draws.
    """
    fresh_rows = np.asarray(fresh_rows, dtype=np.float64)
    if fresh_rows.ndim != 2:
        raise ValueError("fresh samples must be an (K, n) array")
    K = fresh_rows.shape[0]
    if K < 1 or K % 2 == 0:
        raise ValueError(f"median sample count must be odd and positive, got {K}")
    deriv = q_i.partial_derivative(indices)
    return float(np.median(deriv.evaluate_many(fresh_rows)))


def learn_structure(samples, cfg: MrfConfig, return_details=False):
    """Recover the dependency graph by thresholding median derivatives.

    The last K samples are reserved for medians; the rest feed the
    per-vertex GLM learners.  For each vertex i and each nonempty
    candidate monomial I over the other variables (|I| <= t-1), the
    median of (d_I q_i)(Z) over the fresh samples is compared against
    eta/2; crossing it adds the clique on {i} u I.
    """
    if cfg.eta <= 0:
        raise ValueError("structure recovery requires eta > 0")
    rows = _as_rows(samples)
    N, n = rows.shape
    K = cfg.K if cfg.K is not None else default_median_count(n, cfg.t, cfg.rho, cfg.median_constant)
    if N <= K + 1:
        raise SampleShortfallError(
            f"{N} samples cannot cover K={K} median draws plus a training block",
            required=K + 2,
            available=N,
        )
    train_rows = rows[: N - K]
    fresh = rows[N - K :].astype(np.float64)

    def one(i):
        q_i, diag = learn_derivative_poly(train_rows, i, cfg)
        hits = []
        for size in range(1, cfg.t):
            for I in itertools.combinations([j for j in range(n) if j != i], size):
                med = median_coefficient(q_i, I, fresh)
                if abs(med) > cfg.eta / 2.0:
                    hits.append((I, med))
        return q_i, diag, hits

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_vertex = list(pool.map(one, range(n)))
    else:
        per_vertex = [one(i) for i in range(n)]

    edges = set()
    for i, (_, _, hits) in enumerate(per_vertex):
        for I, _ in hits:
            group = sorted((i,) + I)
            edges.update(itertools.combinations(group, 2))
    edges = sorted(edges)
    if return_details:
        return edges, per_vertex
    return edges


def learn_parameters(samples, cfg: MrfConfig):
    """Estimate psi itself (up to its unidentifiable constant term).

    Each vertex contributes its derivative polynomial estimate; the
    coefficient of a monomial I is taken from the vertex min(I).  The
    constant term is fixed at 0, so comparisons against a ground-truth
    polynomial are modulo constants.
    """
    rows = _as_rows(samples)
    n = rows.shape[1]

    def one(i):
        return learn_derivative_poly(rows, i, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_vertex = list(pool.map(one, range(n)))
    else:
        per_vertex = [one(i) for i in range(n)]

    coeffs = {}
    for size in range(1, cfg.t + 1):
        for I in itertools.combinations(range(n), size):
            i = I[0]
            value = per_vertex[i][0].coeff(tuple(j for j in I if j != i))
            if value != 0.0:
                coeffs[I] = value
    poly = MultilinearPoly(n, cfg.t, coeffs)
    diagnostics = [diag for _, diag in per_vertex]
    return poly, diagnostics


def l1_guarantee_report(p, q, dist) -> dict:
    """Check the l1-recovery bound for a learned polynomial q against p.

    Computes the exact squared-sigmoid risk between p and q under the
    given enumerated distribution and evaluates the closed-form bound
    relating that risk to ||p - q||_1; see the verification module for
    the bound itself.
    """
    from .oracle import poly_l1_bound_report

    return poly_l1_bound_report(p, q, dist)
