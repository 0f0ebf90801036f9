"""Binary pairwise models: representation, conditionals, and learners.

A model on n spins in {-1,+1} has a symmetric zero-diagonal coupling
matrix A and an external field theta, with unnormalized mass

    exp( sum_{i<j} A_ij z_i z_j + sum_i theta_i z_i ).

The conditional law of one spin given the rest is a logistic function of
a linear form, so each row of A is recoverable by the sparse GLM learner:
feed it X = (Z_{-i}, 1), Y = (1 - Z_i)/2, and map the learned weights v
back through A_ij = -v_j / 2, theta_i = -v_bias / 2.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .polynomials import sigmoid
from .sparsitron import SampleShortfallError, SparsitronConfig, sparsitron_learn

# Fixed choice for the "sufficiently small" constant scaling the internal
# risk target gamma = c' * exp(-5 lam) * eps^2 of a row learner.
GAMMA_CONSTANT = 0.01


@dataclass(frozen=True)
class IsingModel:
    """Couplings A (symmetric, zero diagonal) and field theta on n spins."""

    A: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        theta = np.array(self.theta, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if theta.shape != (A.shape[0],):
            raise ValueError("theta length must match A")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        if np.any(np.abs(np.diag(A)) > 0):
            raise ValueError("A must have zero diagonal")
        A.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def width(self) -> float:
        """max_i ( sum_j |A_ij| + |theta_i| ), the conditioning parameter."""
        return float(np.max(np.sum(np.abs(self.A), axis=1) + np.abs(self.theta)))

    @property
    def edges(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.A[i, j] != 0.0:
                    out.append((i, j))
        return out

    def log_mass(self, z) -> float:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.n,):
            raise ValueError(f"state has shape {z.shape}, expected ({self.n},)")
        return float(0.5 * z @ self.A @ z + self.theta @ z)

    def log_mass_many(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        return 0.5 * np.einsum("si,ij,sj->s", Z, self.A, Z) + Z @ self.theta

    def conditional_minus(self, i, x_rest) -> float:
        """P[Z_i = -1 | Z_{-i} = x_rest], x_rest over the other n-1 spins."""
        x_rest = np.asarray(x_rest, dtype=np.float64)
        if x_rest.shape != (self.n - 1,):
            raise ValueError(f"expected {self.n - 1} conditioning spins")
        row = np.delete(self.A[i], i)
        return float(sigmoid(-2.0 * float(row @ x_rest) - 2.0 * self.theta[i]))

    def conditional_minus_many(self, i, Z) -> np.ndarray:
        """Vectorized conditional over full states Z (column i ignored)."""
        Z = np.asarray(Z, dtype=np.float64)
        fields = Z @ self.A[i]  # A_ii = 0, so column i drops out
        return sigmoid(-2.0 * fields - 2.0 * self.theta[i])

    def to_json_dict(self) -> dict:
        return {"n": self.n, "A": self.A.tolist(), "theta": self.theta.tolist()}

    @classmethod
    def from_json_dict(cls, d) -> "IsingModel":
        return cls(np.asarray(d["A"], dtype=np.float64), np.asarray(d["theta"], dtype=np.float64))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, s) -> "IsingModel":
        return cls.from_json_dict(json.loads(s))


@dataclass
class RowEstimate:
    """One recovered row: couplings to the other spins plus the field term."""

    i: int
    row: np.ndarray  # length n, zero at position i
    theta: float
    diagnostics: dict


@dataclass
class IsingEstimate:
    """Full-model estimate; rows are learned independently.

    A holds the raw per-row estimates (generally asymmetric since (i,j)
    and (j,i) come from different learners); A_sym averages the two.
    """

    A: np.ndarray
    theta: np.ndarray
    diagnostics: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def A_sym(self) -> np.ndarray:
        return 0.5 * (self.A + self.A.T)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "A": self.A.tolist(), "theta": self.theta.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def row_gamma(lam: float, eps: float, constant=GAMMA_CONSTANT) -> float:
    """Internal squared-loss target for recovering a row to accuracy eps."""
    return min(0.25, constant * math.exp(-5.0 * lam) * eps**2)


def _split_counts(N, holdout_frac, holdout_cap):
    if N < 2:
        raise SampleShortfallError(
            f"need at least 2 samples to split into train and holdout, got {N}",
            required=2,
            available=N,
        )
    M = min(max(1, int(holdout_frac * N)), holdout_cap, N - 1)
    return N - M, M


def _as_rows(samples) -> np.ndarray:
    rows = getattr(samples, "rows", samples)
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError("samples must be an (N, n) array of +-1 spins")
    return rows


def learn_row(
    samples,
    i,
    lam,
    eps=0.1,
    rho=0.05,
    *,
    holdout_frac=0.2,
    holdout_cap=10_000,
    max_candidates=128,
    gamma=None,
) -> RowEstimate:
    """Recover row i of the coupling matrix and the field theta_i.

    Builds the supervised stream (X, Y) = ((Z_{-i}, 1), (1 - Z_i)/2) and
    runs the multiplicative-weights learner with l1 bound 2*lam, sizing
    the run from the available samples (first block hold-out, rest
    training).  The theory-prescribed sizes for the internal risk target
    gamma are reported in the diagnostics; they are far more conservative
    than what recovery needs in practice.
    """
    rows = _as_rows(samples)
    N, n = rows.shape
    if not 0 <= i < n:
        raise ValueError(f"vertex {i} out of range for n={n}")
    T, M = _split_counts(N, holdout_frac, holdout_cap)

    X = np.empty((N, n), dtype=np.float64)
    others = [j for j in range(n) if j != i]
    for col, j in enumerate(others):
        X[:, col] = rows[:, j]
    X[:, n - 1] = 1.0
    Y = (1.0 - rows[:, i].astype(np.float64)) / 2.0

    cfg = SparsitronConfig(lam=2.0 * lam, T=T, M=M, max_candidates=max_candidates)
    result = sparsitron_learn((X, Y), cfg, validate=False)

    gamma = row_gamma(lam, eps) if gamma is None else gamma
    d = 2 * n + 1
    theory = SparsitronConfig.for_accuracy(2.0 * lam, d, min(gamma, 0.999), rho / max(n, 1))
    row = np.zeros(n)
    row[others] = -0.5 * result.v_signed[: n - 1]
    theta_i = -0.5 * float(result.v_signed[n - 1])
    diagnostics = {
        "vertex": i,
        "samples": int(N),
        "train_steps": int(T),
        "holdout": int(M),
        "holdout_risk": result.risk,
        "chosen_step": result.step,
        "beta": result.beta,
        "gamma_target": gamma,
        "theory_train_steps": theory.T,
        "theory_holdout": theory.M,
    }
    return RowEstimate(i=i, row=row, theta=theta_i, diagnostics=diagnostics)


def learn_model(samples, lam, eps=0.1, rho=0.05, threads=1, **row_kwargs) -> IsingEstimate:
    """Learn every row independently; rows i get failure budget rho/n each."""
    rows = _as_rows(samples)
    n = rows.shape[1]

    def one(i):
        return learn_row(rows, i, lam, eps=eps, rho=rho, **row_kwargs)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]

    A = np.zeros((n, n))
    theta = np.zeros(n)
    for res in results:
        A[res.i] = res.row
        theta[res.i] = res.theta
    return IsingEstimate(A=A, theta=theta, diagnostics=[r.diagnostics for r in results])


def structure_edges(estimate, eta) -> list[tuple[int, int]]:
    """Edges whose symmetrized coupling estimate clears the eta/2 threshold."""
    A = estimate.A_sym if isinstance(estimate, IsingEstimate) else np.asarray(estimate)
    n = A.shape[0]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(A[i, j]) >= eta / 2.0:
                out.append((i, j))
    return out


def edge_precision_recall(found, truth) -> tuple[float, float]:
    """Precision/recall of a recovered edge set against the true one."""
    found = {tuple(sorted(e)) for e in found}
    truth = {tuple(sorted(e)) for e in truth}
    tp = len(found & truth)
    precision = tp / len(found) if found else 1.0
    recall = tp / len(truth) if truth else 1.0
    return precision, recall


class OnlineIsingLearner:
    """Streaming variant: one dual-weight update per incoming sample.

    Every ordered pair (i, j), j != i, carries a positive and a negative
    candidate weight, initialized uniformly at 1/(2(n-1)).  For a sample
    Z, each row i computes its prediction p_i = sum_j A_hat_ij Z_j, the
    penalty l_ij = (sigmoid(-2 p_i) - (1 - Z_i)/2) Z_j, and scales the
    dual weights by beta**(+-l_ij).  The current estimate is read off the
    normalized weight gap:

        A_hat_ij = -(lam / (2 sum_l (W+_il + W-_il))) * (W+_ij - W-_ij).

    This is, step for step, the sparse GLM learner run on the doubled
    features (Z_{-i}, -Z_{-i}) with Hedge rate beta**2: the doubled loss
    (1 +- l_ij)/2 splits into a shared factor that cancels under
    normalization and the +-l_ij/2 exponent kept here, and the -1/2
    factor converts GLM weights into couplings.
    """

    def __init__(self, n, lam, beta):
        if n < 2:
            raise ValueError("need at least 2 vertices")
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.n = n
        self.lam = float(lam)
        self.beta = float(beta)
        init = math.log(1.0 / (2.0 * (n - 1)))
        self.log_w_pos = np.full((n, n), init)
        self.log_w_neg = np.full((n, n), init)
        np.fill_diagonal(self.log_w_pos, -np.inf)
        np.fill_diagonal(self.log_w_neg, -np.inf)
        self.samples_seen = 0

    @property
    def A_hat(self) -> np.ndarray:
        shift = np.maximum(
            np.max(self.log_w_pos, axis=1), np.max(self.log_w_neg, axis=1)
        )
        wp = np.exp(self.log_w_pos - shift[:, None])
        wn = np.exp(self.log_w_neg - shift[:, None])
        np.fill_diagonal(wp, 0.0)
        np.fill_diagonal(wn, 0.0)
        denom = np.sum(wp + wn, axis=1)
        A = -(self.lam / 2.0) * (wp - wn) / denom[:, None]
        np.fill_diagonal(A, 0.0)
        return A

    def update(self, z) -> np.ndarray:
        """Consume one sample; returns the penalty matrix applied."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.n,):
            raise ValueError(f"sample has shape {z.shape}, expected ({self.n},)")
        A = self.A_hat
        preds = A @ z
        y = (1.0 - z) / 2.0
        penalties = (sigmoid(-2.0 * preds) - y)[:, None] * z[None, :]
        np.fill_diagonal(penalties, 0.0)
        lnb = math.log(self.beta)
        self.log_w_pos += lnb * penalties
        self.log_w_neg -= lnb * penalties
        self.samples_seen += 1
        return penalties
