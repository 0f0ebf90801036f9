"""Multiplicative-weights learner for sparse generalized linear models.

Learns a weight vector w with ||w||_1 <= lambda from examples (x, y),
x in [-1,1]^n, y in [0,1], whose conditional mean is E[y|x] = u(w . x)
for a known monotone 1-Lipschitz transfer u (the logistic function by
default).  Each coordinate is treated as an expert in a Hedge game: the
loss vector l = (1 + (u(lam p.x) - y) x) / 2 lies in [0,1]^d, weights
are multiplied by beta**l, and candidates lam*p are scored on a holdout
to pick the final answer.

Signed weight vectors are handled by the standard doubling map
x -> (x, -x, 0): the learner runs over nonnegative weights in dimension
2n+1, and the slack coordinate absorbs any unused l1 mass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .polynomials import sigmoid


class SampleShortfallError(ValueError):
    """Raised when a learner is given fewer examples than it needs."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


def default_beta(d: int, T: int) -> float:
    """Hedge learning rate 1/(1 + sqrt(ln(d)/T)) for d experts, T rounds."""
    if d < 1 or T < 1:
        raise ValueError("need d >= 1 and T >= 1")
    return 1.0 / (1.0 + math.sqrt(math.log(d) / T))


@dataclass(frozen=True)
class SparsitronConfig:
    """Run parameters for the multiplicative-weights GLM learner.

    Parameters
    ----------
    lam : float
        Upper bound on the l1 norm of the target weight vector.
    T : int
        Number of multiplicative-weight update steps.
    M : int
        Holdout size used to score candidate vectors.
    beta : float, optional
        Hedge learning rate in (0, 1]; derived from (d, T) when omitted.
    transfer : callable, optional
        Monotone 1-Lipschitz transfer u: R -> [0,1]; logistic if omitted.
        The compiled fast path only applies to the logistic transfer.
    max_candidates : int
        Cap on how many of the T candidate vectors are scored on the
        holdout.  Steps are subsampled on an even stride that always
        includes steps 1 and T; with max_candidates >= T every candidate
        is scored.
    """

    lam: float
    T: int
    M: int
    beta: float | None = None
    transfer: object = None
    max_candidates: int = 128

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.T < 1 or self.M < 1:
            raise ValueError("T and M must be >= 1")
        if self.beta is not None and not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")

    @classmethod
    def for_accuracy(cls, lam, d, eps, delta, c=8.0, **kwargs):
        """Sizes (T, M) that guarantee squared-transfer risk <= eps.

        T = ceil(c lam^2 ln(2d/delta) / eps^2) update steps and
        M = ceil(c ln(2T/delta) / eps^2) holdout examples, with c = 8 by
        default.  These are worst-case sizes; in practice far fewer
        samples give usable estimates, so batch learners size their runs
        from the available data and report these numbers as diagnostics.
        """
        if not 0 < eps < 1 or not 0 < delta < 1:
            raise ValueError("eps and delta must lie in (0, 1)")
        T = max(1, math.ceil(c * max(lam, 1e-12) ** 2 * math.log(2 * d / delta) / eps**2))
        M = max(1, math.ceil(c * math.log(2 * T / delta) / eps**2))
        return cls(lam=lam, T=T, M=M, **kwargs)

    def transfer_fn(self):
        return self.transfer if self.transfer is not None else sigmoid

    def uses_fast_transfer(self) -> bool:
        return self.transfer is None or self.transfer is sigmoid


@dataclass
class SparsitronState:
    """Mutable per-run state: log-weights over d experts plus step count."""

    d: int
    beta: float
    step: int = 0
    log_weights: np.ndarray = None
    candidates: list | None = None

    @classmethod
    def fresh(cls, d, cfg: SparsitronConfig, track_candidates=False):
        beta = cfg.beta if cfg.beta is not None else default_beta(d, cfg.T)
        return cls(
            d=d,
            beta=beta,
            step=0,
            log_weights=np.zeros(d),
            candidates=[] if track_candidates else None,
        )

    def probabilities(self) -> np.ndarray:
        """Current normalized weight vector p = w / ||w||_1."""
        m = np.max(self.log_weights)
        e = np.exp(self.log_weights - m)
        return e / np.sum(e)

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "beta": self.beta,
                "step": self.step,
                "log_weights": self.log_weights.tolist(),
            }
        )

    @classmethod
    def from_json(cls, s: str) -> "SparsitronState":
        d = json.loads(s)
        return cls(
            d=d["d"],
            beta=d["beta"],
            step=d["step"],
            log_weights=np.asarray(d["log_weights"], dtype=np.float64),
        )


@dataclass(frozen=True)
class SparsitronResult:
    """Outcome of a batch run.

    v is the selected candidate lam * p in the space the learner ran in
    (the doubled space when doubling was applied); v_signed folds the
    doubled coordinates back into a signed vector of the original input
    dimension (equal to v when no doubling was applied).
    """

    v: np.ndarray
    v_signed: np.ndarray
    step: int
    risk: float
    beta: float
    candidate_steps: np.ndarray
    candidate_risks: np.ndarray
    consumed: int


def double_features(x) -> np.ndarray:
    """Map x to (x, -x, 0), the nonnegative-weight embedding.

    A signed weight vector w with ||w||_1 <= lam corresponds to the
    nonnegative vector (max(w,0), max(-w,0), lam - ||w||_1) on the image,
    so learning over the image loses nothing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if x.size and (np.any(np.isnan(x)) or np.max(np.abs(x)) > 1.0 + 1e-12):
        raise ValueError("entries must lie in [-1, 1]")
    out = np.empty(2 * x.size + 1)
    out[: x.size] = x
    out[x.size : 2 * x.size] = -x
    out[2 * x.size] = 0.0
    return out


def signed_from_doubled(v) -> np.ndarray:
    """Collapse a vector over (x, -x, 0) coordinates to signed weights."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size % 2 != 1:
        raise ValueError("expected a 1-d vector of odd length 2n+1")
    n = v.size // 2
    return v[:n] - v[n : 2 * n]


def hedge_update(state: SparsitronState, loss) -> SparsitronState:
    """Multiply weights by beta**loss for a loss vector in [0,1]^d."""
    loss = np.asarray(loss, dtype=np.float64)
    if loss.shape != (state.d,):
        raise ValueError(f"loss has shape {loss.shape}, expected ({state.d},)")
    if np.any(np.isnan(loss)) or np.min(loss) < -1e-12 or np.max(loss) > 1.0 + 1e-12:
        raise ValueError("loss entries must lie in [0, 1]")
    state.log_weights = state.log_weights + math.log(state.beta) * loss
    state.step += 1
    return state


def sparsitron_step(state: SparsitronState, x, y, cfg: SparsitronConfig) -> SparsitronState:
    """One online update from example (x, y); x already in learner space.

    Computes p from the current weights, forms the loss
    l = (1 + (u(lam p.x) - y) x) / 2 in [0,1]^d, applies the Hedge
    update, and (optionally) records p as a candidate.
    """
    if state.step >= cfg.T:
        raise ValueError(f"state already ran its {cfg.T} configured steps")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.d,):
        raise ValueError(f"x has shape {x.shape}, expected ({state.d},)")
    if np.any(np.isnan(x)):
        raise ValueError("x contains NaN")
    if x.size and np.max(np.abs(x)) > 1.0 + 1e-12:
        raise ValueError("x entries must lie in [-1, 1]")
    y = float(y)
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y={y} outside [0, 1]")
    p = state.probabilities()
    if state.candidates is not None:
        state.candidates.append(p)
    u = cfg.transfer_fn()
    g = float(u(cfg.lam * float(p @ x))) - y
    loss = 0.5 * (1.0 + g * x)
    return hedge_update(state, loss)


def empirical_risk(v, holdout_x, holdout_y, cfg: SparsitronConfig) -> float:
    """Mean squared gap (u(v.a) - b)^2 over holdout pairs (a, b)."""
    A = np.asarray(holdout_x, dtype=np.float64)
    b = np.asarray(holdout_y, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != b.shape[0] or A.shape[0] == 0:
        raise ValueError("holdout must be a nonempty (M, d) array with M labels")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.shape[1],):
        raise ValueError(f"v has shape {v.shape}, expected ({A.shape[1]},)")
    u = cfg.transfer_fn()
    preds = u(A @ v)
    return float(np.mean((preds - b) ** 2))


def candidate_schedule(T: int, max_candidates: int) -> np.ndarray:
    """Step indices (1-based) whose candidates get scored on the holdout."""
    if max_candidates >= T:
        return np.arange(1, T + 1, dtype=np.int64)
    stride = math.ceil(T / max_candidates)
    steps = np.arange(1, T + 1, stride, dtype=np.int64)
    if steps[-1] != T:
        steps = np.append(steps, T)
    return steps


def _coerce_examples(examples, needed):
    """Accept (X, Y) arrays or an iterable of (x, y) pairs."""
    if isinstance(examples, tuple) and len(examples) == 2:
        X = np.asarray(examples[0], dtype=np.float64)
        Y = np.asarray(examples[1], dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != Y.shape[0]:
            raise ValueError("expected (X, Y) with X (N, n) and Y (N,)")
        return X, Y
    xs, ys = [], []
    it = iter(examples)
    for x, y in it:
        xs.append(np.asarray(x, dtype=np.float64))
        ys.append(float(y))
        if len(xs) == needed:
            break
    if not xs:
        raise SampleShortfallError(
            f"example stream supplied 0 of the {needed} required examples",
            required=needed,
            available=0,
        )
    return np.asarray(xs), np.asarray(ys)


def sparsitron_learn(examples, cfg: SparsitronConfig, double=True, validate=True) -> SparsitronResult:
    """Batch run: holdout first, then T updates, then candidate selection.

    The first M examples form the holdout; the next T drive the weight
    updates.  Candidates lam*p_t at the scheduled steps are scored by
    empirical risk on the holdout and the minimizer is returned, ties
    broken toward the earliest step.

    Parameters
    ----------
    examples : (X, Y) arrays or iterable of (x, y)
        Must supply at least T + M examples with x in [-1,1]^n and
        y in [0,1].
    cfg : SparsitronConfig
    double : bool
        Apply the (x, -x, 0) embedding so signed targets are learnable.
        v_signed in the result maps the answer back to the input space.
    validate : bool
        Range-check the inputs; callers that construct features from
        checked samples skip the scan.
    """
    X, Y = _coerce_examples(examples, cfg.T + cfg.M)
    N = X.shape[0]
    if N < cfg.T + cfg.M:
        raise SampleShortfallError(
            f"stream exhausted: consumed {N} examples but T+M={cfg.T + cfg.M} are required",
            required=cfg.T + cfg.M,
            available=N,
        )
    if validate:
        if X.size and (np.any(np.isnan(X)) or np.max(np.abs(X)) > 1.0 + 1e-12):
            raise ValueError("features must lie in [-1, 1] and contain no NaN")
        if np.min(Y) < 0.0 or np.max(Y) > 1.0:
            raise ValueError("labels must lie in [0, 1]")

    hold_X, hold_Y = X[: cfg.M], Y[: cfg.M]
    train_X, train_Y = X[cfg.M : cfg.M + cfg.T], Y[cfg.M : cfg.M + cfg.T]
    n = X.shape[1]
    d = 2 * n + 1 if double else n
    beta = cfg.beta if cfg.beta is not None else default_beta(d, cfg.T)
    steps = candidate_schedule(cfg.T, cfg.max_candidates)

    if double and cfg.uses_fast_transfer():
        P, _ = _kernels.mw_run(
            np.ascontiguousarray(train_X), np.ascontiguousarray(train_Y),
            float(cfg.lam), float(beta), steps,
        )
    else:
        P = _run_python(train_X, train_Y, cfg, beta, steps, double)

    if double:
        signed = cfg.lam * (P[:, :n] - P[:, n : 2 * n])
    else:
        signed = cfg.lam * P
    u = cfg.transfer_fn()
    preds = u(signed @ hold_X.T)
    risks = np.mean((preds - hold_Y[None, :]) ** 2, axis=1)
    best = int(np.argmin(risks))
    v = cfg.lam * P[best]
    return SparsitronResult(
        v=v,
        v_signed=signed[best],
        step=int(steps[best]),
        risk=float(risks[best]),
        beta=beta,
        candidate_steps=steps,
        candidate_risks=risks,
        consumed=cfg.M + cfg.T,
    )


def _run_python(train_X, train_Y, cfg, beta, steps, double):
    """Reference step-by-step path; used for non-logistic transfers."""
    d = 2 * train_X.shape[1] + 1 if double else train_X.shape[1]
    state = SparsitronState(d=d, beta=beta, log_weights=np.zeros(d))
    P = np.empty((steps.size, d))
    ci = 0
    u = cfg.transfer_fn()
    for t in range(cfg.T):
        x = double_features(train_X[t]) if double else train_X[t]
        p = state.probabilities()
        if ci < steps.size and steps[ci] == t + 1:
            P[ci] = p
            ci += 1
        g = float(u(cfg.lam * float(p @ x))) - train_Y[t]
        hedge_update(state, 0.5 * (1.0 + g * x))
    return P
