"""Pairwise models over a general alphabet {1, ..., k}.

Each unordered pair {i, j} carries a k x k interaction matrix and each
site a length-k potential; the unnormalized mass of x in [k]^n is

    exp( sum_{i<j} W_ij(x_i, x_j) + sum_i theta_i(x_i) ).

Interaction matrices are only identified up to row/column shifts (those
absorb into the site potentials), so models are normalized by centering:
after center() every W_ij has zero row and column sums.

Learning reduces to binary GLMs: restricted to samples where site i
takes one of two symbols {alpha, beta}, the indicator of beta is a
logistic function of one-hot features of the other sites.  Averaging the
learned pairwise differences over beta recovers the centered entries.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .polynomials import sigmoid
from .sparsitron import SampleShortfallError, SparsitronConfig, sparsitron_learn


def one_hot(x, k) -> np.ndarray:
    """Indicator vector of a symbol in {1, ..., k}."""
    x = int(x)
    if not 1 <= x <= k:
        raise ValueError(f"symbol {x} outside alphabet 1..{k}")
    out = np.zeros(k)
    out[x - 1] = 1.0
    return out


@dataclass(frozen=True)
class NonBinaryIsing:
    """Pairwise interactions W[{i,j}] and site potentials theta over [k]^n.

    W maps index pairs (i, j) with i < j to k x k matrices read as
    W[(i,j)][x_i - 1, x_j - 1]; absent pairs are zero.  theta has shape
    (n, k).
    """

    n: int
    k: int
    W: dict
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        if theta.shape != (self.n, self.k):
            raise ValueError(f"theta must have shape ({self.n}, {self.k})")
        theta.setflags(write=False)
        W = {}
        for key, mat in self.W.items():
            i, j = int(key[0]), int(key[1])
            if not (0 <= i < j < self.n):
                raise ValueError(f"pair {key} must satisfy 0 <= i < j < n")
            mat = np.array(mat, dtype=np.float64)
            if mat.shape != (self.k, self.k):
                raise ValueError(f"W[{key}] must be {self.k} x {self.k}")
            mat.setflags(write=False)
            W[(i, j)] = mat
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "theta", theta)

    def interaction(self, i, j) -> np.ndarray:
        """W as seen from site i: entry [a-1, b-1] couples x_i=a, x_j=b."""
        if i == j:
            raise ValueError("no self-interaction")
        if i < j:
            return self.W.get((i, j), np.zeros((self.k, self.k)))
        return self.W.get((j, i), np.zeros((self.k, self.k))).T

    @property
    def width(self) -> float:
        """max_{i,a} ( sum_{j != i} max_b |W_ij(a,b)| + |theta_i(a)| )."""
        worst = 0.0
        for i in range(self.n):
            per_symbol = np.abs(self.theta[i]).copy()
            for j in range(self.n):
                if j != i:
                    per_symbol += np.max(np.abs(self.interaction(i, j)), axis=1)
            worst = max(worst, float(np.max(per_symbol)))
        return worst

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(key for key, mat in self.W.items() if np.any(mat != 0.0))

    def log_mass(self, x) -> float:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.n,):
            raise ValueError(f"state has shape {x.shape}, expected ({self.n},)")
        if np.min(x) < 1 or np.max(x) > self.k:
            raise ValueError("symbols must lie in 1..k")
        total = float(np.sum(self.theta[np.arange(self.n), x - 1]))
        for (i, j), mat in self.W.items():
            total += mat[x[i] - 1, x[j] - 1]
        return total

    def log_mass_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        out = np.sum(self.theta[np.arange(self.n)[None, :], X - 1], axis=1)
        for (i, j), mat in self.W.items():
            out += mat[X[:, i] - 1, X[:, j] - 1]
        return out

    def pair_conditional(self, i, alpha, beta, x_rest) -> float:
        """P[Z_i = beta | Z_i in {alpha, beta}, Z_{-i} = x_rest].

        Equals sigmoid(s(beta) - s(alpha)) for the site score
        s(c) = sum_{j != i} W_ij(c, x_j) + theta_i(c).
        """
        if alpha == beta:
            raise ValueError("alpha and beta must differ")
        x_rest = np.asarray(x_rest, dtype=np.int64)
        if x_rest.shape != (self.n - 1,):
            raise ValueError(f"expected {self.n - 1} conditioning symbols")
        others = [j for j in range(self.n) if j != i]
        s_alpha = float(self.theta[i, alpha - 1])
        s_beta = float(self.theta[i, beta - 1])
        for j, xj in zip(others, x_rest):
            mat = self.interaction(i, j)
            s_alpha += mat[alpha - 1, xj - 1]
            s_beta += mat[beta - 1, xj - 1]
        return float(sigmoid(s_beta - s_alpha))

    def center(self) -> "NonBinaryIsing":
        """Equivalent model whose interaction matrices sum to zero along
        both axes; the removed means are absorbed into the potentials.

        Idempotent, and preserves the normalized density exactly.
        """
        theta = np.array(self.theta, dtype=np.float64)
        W = {}
        for (i, j), mat in self.W.items():
            mat = np.array(mat, dtype=np.float64)
            col_means = np.mean(mat, axis=0)
            mat -= col_means[None, :]
            theta[j] += col_means
            row_means = np.mean(mat, axis=1)
            mat -= row_means[:, None]
            theta[i] += row_means
            W[(i, j)] = mat
        return NonBinaryIsing(n=self.n, k=self.k, W=W, theta=theta)

    def is_centered(self, atol=1e-9) -> bool:
        return all(
            np.all(np.abs(mat.sum(axis=0)) <= atol)
            and np.all(np.abs(mat.sum(axis=1)) <= atol)
            for mat in self.W.values()
        )

    @classmethod
    def from_ising(cls, model) -> "NonBinaryIsing":
        """Binary special case: symbol 1 is spin +1, symbol 2 is spin -1."""
        spin = np.array([1.0, -1.0])
        n = model.n
        W = {}
        for i in range(n):
            for j in range(i + 1, n):
                if model.A[i, j] != 0.0:
                    W[(i, j)] = model.A[i, j] * np.outer(spin, spin)
        theta = np.outer(model.theta, spin)
        return cls(n=n, k=2, W=W, theta=theta)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "W": [
                {"i": i, "j": j, "matrix": mat.tolist()}
                for (i, j), mat in sorted(self.W.items())
            ],
            "theta": self.theta.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d) -> "NonBinaryIsing":
        W = {(e["i"], e["j"]): np.asarray(e["matrix"], dtype=np.float64) for e in d["W"]}
        return cls(n=d["n"], k=d["k"], W=W, theta=np.asarray(d["theta"], dtype=np.float64))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


@dataclass
class PairEstimate:
    """Learned symbol-pair differences for one vertex.

    U has shape (n-1, k); row j estimates the difference
    W_i,other(alpha, .) - W_i,other(beta, .) for the j-th other vertex,
    re-centered so each row sums to zero.  theta_gap estimates
    theta_i(alpha) - theta_i(beta) (diagnostic only).
    """

    i: int
    alpha: int
    beta: int
    U: np.ndarray
    theta_gap: float
    diagnostics: dict


@dataclass(frozen=True)
class NonBinaryConfig:
    """lam is the model width; l1_bound caps the pair learners' weight
    norm and defaults to 2(k+1)lam, the worst case for one-hot features:
    each of the n-1 blocks contributes up to k times its largest entry
    difference, plus the bias."""

    lam: float
    eta: float = 0.0
    rho: float = 0.05
    l1_bound: float | None = None
    holdout_frac: float = 0.2
    holdout_cap: int = 10_000
    max_candidates: int = 128
    min_filtered: int = 16
    threads: int = 1

    def pair_l1_bound(self, k: int) -> float:
        return self.l1_bound if self.l1_bound is not None else 2.0 * (k + 1) * self.lam


def _as_rows(samples) -> np.ndarray:
    rows = getattr(samples, "rows", samples)
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError("samples must be an (N, n) array of symbols in 1..k")
    return rows


def _one_hot_features(rows, i, k) -> np.ndarray:
    """One-hot blocks for every site except i, plus a bias column."""
    N, n = rows.shape
    others = np.delete(rows, i, axis=1)
    D = k * (n - 1) + 1
    F = np.zeros((N, D))
    for j in range(n - 1):
        F[np.arange(N), j * k + (others[:, j] - 1)] = 1.0
    F[:, -1] = 1.0
    return F


def learn_pair_block(samples, i, alpha, beta, k, cfg: NonBinaryConfig) -> PairEstimate:
    """Learn the (alpha, beta) symbol-difference block for vertex i.

    Keeps only samples where site i takes a value in {alpha, beta}
    (any two-symbol restriction of the model is again a logistic GLM in
    one-hot features of the other sites), learns under the config's
    pair l1 bound, and re-centers each length-k block of the answer.
    """
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    rows = _as_rows(samples)
    N, n = rows.shape
    mask = (rows[:, i] == alpha) | (rows[:, i] == beta)
    filtered = rows[mask]
    Nf = filtered.shape[0]
    expected_rate = 2.0 * math.exp(-2.0 * cfg.lam) / k
    rate = Nf / N if N else 0.0
    if Nf < max(cfg.min_filtered, 2) or (N > 0 and rate < expected_rate / 3.0):
        raise SampleShortfallError(
            f"only {Nf}/{N} samples have site {i} in {{{alpha},{beta}}} "
            f"(acceptance rate {rate:.4f}, expected at least {expected_rate:.4f})",
            required=max(cfg.min_filtered, 2),
            available=Nf,
        )

    F = _one_hot_features(filtered, i, k)
    Y = (filtered[:, i] == beta).astype(np.float64)
    M = min(max(1, int(cfg.holdout_frac * Nf)), cfg.holdout_cap, Nf - 1)
    T = Nf - M
    run_cfg = SparsitronConfig(
        lam=cfg.pair_l1_bound(k), T=T, M=M, max_candidates=cfg.max_candidates
    )
    result = sparsitron_learn((F, Y), run_cfg, validate=False)

    blocks = result.v_signed[: k * (n - 1)].reshape(n - 1, k)
    bias = float(result.v_signed[-1])
    means = np.mean(blocks, axis=1)
    blocks = blocks - means[:, None]
    bias += float(np.sum(means))
    # The GLM weights estimate the beta-minus-alpha differences; flip to
    # the alpha-minus-beta orientation this estimate is defined to carry.
    U = -blocks
    diagnostics = {
        "vertex": i,
        "alpha": alpha,
        "beta": beta,
        "raw_samples": int(N),
        "filtered_samples": int(Nf),
        "acceptance_rate": rate,
        "holdout_risk": result.risk,
        "chosen_step": result.step,
    }
    return PairEstimate(
        i=i, alpha=alpha, beta=beta, U=U, theta_gap=-bias, diagnostics=diagnostics
    )


def combine_pair_blocks(blocks, k) -> np.ndarray:
    """Average pair differences into direct estimates of centered entries.

    blocks maps ordered symbol pairs (alpha, beta) with alpha < beta to
    PairEstimates for one vertex; the reverse pairs follow by
    antisymmetry.  Because each centered column sums to zero over the
    first argument, (1/k) sum_beta (W(alpha,.) - W(beta,.)) = W(alpha,.),
    so the output (n-1, k, k) array estimates W itself.
    """
    some = next(iter(blocks.values()))
    n_minus_1 = some.U.shape[0]
    for alpha in range(1, k + 1):
        for beta in range(alpha + 1, k + 1):
            if (alpha, beta) not in blocks:
                raise ValueError(f"missing pair estimate ({alpha}, {beta})")

    def block(alpha, beta):
        if alpha == beta:
            return np.zeros((n_minus_1, k))
        if alpha < beta:
            return blocks[(alpha, beta)].U
        return -blocks[(beta, alpha)].U

    out = np.zeros((n_minus_1, k, k))
    for alpha in range(1, k + 1):
        acc = np.zeros((n_minus_1, k))
        for beta in range(1, k + 1):
            acc += block(alpha, beta)
        out[:, alpha - 1, :] = acc / k
    return out


def learn_vertex(samples, i, k, cfg: NonBinaryConfig):
    """All pair blocks for vertex i, combined into per-neighbor matrices."""
    blocks = {}
    for alpha in range(1, k + 1):
        for beta in range(alpha + 1, k + 1):
            blocks[(alpha, beta)] = learn_pair_block(samples, i, alpha, beta, k, cfg)
    return combine_pair_blocks(blocks, k), blocks


def learn_structure(samples, k, cfg: NonBinaryConfig, return_details=False):
    """Neighbors of each vertex are those whose combined estimate has an
    entry above eta / 2 in magnitude; the edge set is the union over
    vertices."""
    if cfg.eta <= 0:
        raise ValueError("structure recovery requires eta > 0")
    rows = _as_rows(samples)
    n = rows.shape[1]

    def one(i):
        return learn_vertex(rows, i, k, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_vertex = list(pool.map(one, range(n)))
    else:
        per_vertex = [one(i) for i in range(n)]

    edges = set()
    for i, (U, _) in enumerate(per_vertex):
        others = [j for j in range(n) if j != i]
        for idx, j in enumerate(others):
            if np.max(np.abs(U[idx])) > cfg.eta / 2.0:
                edges.add(tuple(sorted((i, j))))
    edges = sorted(edges)
    if return_details:
        return edges, per_vertex
    return edges
