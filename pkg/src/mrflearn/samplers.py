"""Ground-truth sample generation.

Exact sampling enumerates the state space (guarded at 2^24 states),
normalizes with max-subtraction, and inverts the CDF; Gibbs sampling
runs systematic-scan sweeps fed by pre-drawn Philox uniforms so chains
are reproducible bit for bit.  Sample batches round-trip through a plain
text format with a provenance header.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import make_rng
from .ising import IsingModel
from .mrf import MrfModel
from .nonbinary import NonBinaryIsing
from .polynomials import MultilinearPoly

MAX_STATES = 2**24


@dataclass
class SampleBatch:
    """N samples plus the metadata needed to regenerate them.

    rows is an (N, n) int8 array: +-1 when the alphabet size k is 2,
    symbols 1..k otherwise.
    """

    n: int
    k: int
    rows: np.ndarray
    seed: int
    provenance: str

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int8)
        if rows.ndim != 2 or (rows.size and rows.shape[1] != self.n):
            raise ValueError("rows must be an (N, n) array")
        if rows.size:
            if self.k == 2:
                if not np.all(np.abs(rows) == 1):
                    raise ValueError("binary samples must be +-1")
            elif np.min(rows) < 1 or np.max(rows) > self.k:
                raise ValueError(f"symbols must lie in 1..{self.k}")
        self.rows = rows

    def __len__(self):
        return self.rows.shape[0]

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(
                f"# n={self.n} alphabet={self.k} seed={self.seed} "
                f"provenance={self.provenance}\n"
            )
            for row in self.rows:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "SampleBatch":
        with open(path) as fh:
            header = fh.readline()
            m = re.match(
                r"#\s*n=(\d+)\s+alphabet=(\d+)\s+seed=(-?\d+)\s+provenance=(\S+)", header
            )
            if not m:
                raise ValueError(f"malformed sample header: {header!r}")
            n, k, seed = int(m.group(1)), int(m.group(2)), int(m.group(3))
            rows = [
                [int(v) for v in line.split()] for line in fh if line.strip()
            ]
        arr = np.asarray(rows, dtype=np.int8).reshape(len(rows), n)
        return cls(n=n, k=k, rows=arr, seed=seed, provenance=m.group(4))


@dataclass
class ExactDistribution:
    """All k^n states in canonical order with their normalized masses."""

    n: int
    k: int
    states: np.ndarray
    probs: np.ndarray

    def sample(self, N, seed) -> SampleBatch:
        return exact_sample(self, N, seed)


def state_table(n, k) -> np.ndarray:
    """Canonical state enumeration: index read as a big-endian base-k
    numeral, digit 0 mapping to +1 (k=2) or symbol 1 (k>2).

    For k=2 and n=2 the order is (+,+), (+,-), (-,+), (-,-).
    """
    total = k**n
    if total > MAX_STATES:
        raise ValueError(f"state space {k}^{n} exceeds the {MAX_STATES} guard")
    idx = np.arange(total)
    digits = np.empty((total, n), dtype=np.int8)
    for i in range(n):
        digits[:, i] = (idx // k ** (n - 1 - i)) % k
    if k == 2:
        return (1 - 2 * digits).astype(np.int8)
    return (digits + 1).astype(np.int8)


def _log_mass_many(model, states) -> np.ndarray:
    if isinstance(model, (IsingModel, MrfModel)):
        return model.log_mass_many(states.astype(np.float64))
    if isinstance(model, NonBinaryIsing):
        return model.log_mass_many(states)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def alphabet_size(model) -> int:
    return model.k if isinstance(model, NonBinaryIsing) else 2


def exact_distribution(model) -> ExactDistribution:
    """Enumerate, exponentiate with max-subtraction, and normalize."""
    n = model.n
    k = alphabet_size(model)
    states = state_table(n, k)
    lm = _log_mass_many(model, states)
    lm = lm - np.max(lm)
    probs = np.exp(lm)
    probs /= np.sum(probs)
    return ExactDistribution(n=n, k=k, states=states, probs=probs)


def exact_sample(dist: ExactDistribution, N, seed) -> SampleBatch:
    """N i.i.d. draws by inverting the CDF over the canonical order."""
    rng = make_rng(seed)
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(N), side="right")
    rows = dist.states[idx] if N else np.empty((0, dist.n), dtype=np.int8)
    return SampleBatch(n=dist.n, k=dist.k, rows=rows, seed=int(seed), provenance="exact")


def _poly_site_terms(psi: MultilinearPoly, n):
    """Flattened per-site derivative polynomials for the Gibbs kernel."""
    site_start = [0]
    coeffs = []
    idx_start = [0]
    idx_flat = []
    for i in range(n):
        deriv = psi.partial_derivative((i,))
        for mono, c in deriv.sorted_terms():
            coeffs.append(c)
            idx_flat.extend(mono)
            idx_start.append(len(idx_flat))
        site_start.append(len(coeffs))
    return (
        np.asarray(site_start, dtype=np.int64),
        np.asarray(coeffs, dtype=np.float64),
        np.asarray(idx_start, dtype=np.int64),
        np.asarray(idx_flat, dtype=np.int64),
    )


def default_burn_in(n) -> int:
    return 100 * n


def default_thinning(n) -> int:
    return max(1, n // 2)


def gibbs_sample(model, N, burn_in=None, thinning=None, seed=0) -> SampleBatch:
    """Systematic-scan Gibbs chain recording every thinning-th sweep.

    Each sweep resamples coordinates 0..n-1 in order from their exact
    conditional given the rest.  The first burn_in sweeps are discarded;
    afterwards every thinning-th sweep is recorded until N samples exist.
    Consecutive records are correlated unless thinning is well above the
    chain's mixing time; the defaults (burn_in = 100 n, thinning = n/2)
    were calibrated against exact marginals on small models.
    """
    n = model.n
    k = alphabet_size(model)
    burn_in = default_burn_in(n) if burn_in is None else burn_in
    thinning = default_thinning(n) if thinning is None else thinning
    if burn_in < 0 or thinning < 1:
        raise ValueError("need burn_in >= 0 and thinning >= 1")
    rng = make_rng(seed, 1)
    total_sweeps = burn_in + N * thinning
    provenance = f"gibbs(burn_in={burn_in},thinning={thinning})"

    if isinstance(model, NonBinaryIsing):
        rows = _gibbs_nonbinary(model, N, burn_in, thinning, rng, total_sweeps)
        return SampleBatch(n=n, k=k, rows=rows, seed=int(seed), provenance=provenance)

    z = rng.choice(np.array([-1.0, 1.0]), size=n)
    out = np.empty((N, n), dtype=np.float64)
    if isinstance(model, IsingModel):
        args = (np.ascontiguousarray(model.A), np.ascontiguousarray(model.theta))
        kernel = _kernels.gibbs_sweep_ising
    else:
        args = _poly_site_terms(model.psi, n)
        kernel = _kernels.gibbs_sweep_poly

    rec = 0
    sweep0 = 0
    chunk = max(1, (1 << 22) // max(n, 1))
    while sweep0 < total_sweeps:
        m = min(chunk, total_sweeps - sweep0)
        uniforms = rng.random((m, n))
        rec = kernel(*args, z, uniforms, sweep0, burn_in, thinning, out, rec)
        sweep0 += m
    return SampleBatch(
        n=n, k=k, rows=out.astype(np.int8), seed=int(seed), provenance=provenance
    )


def _gibbs_nonbinary(model, N, burn_in, thinning, rng, total_sweeps):
    n, k = model.n, model.k
    mats = [
        [model.interaction(i, j) if j != i else None for j in range(n)]
        for i in range(n)
    ]
    x = rng.integers(1, k + 1, size=n)
    out = np.empty((N, n), dtype=np.int8)
    rec = 0
    uniforms = rng.random((total_sweeps, n))
    for s in range(total_sweeps):
        for i in range(n):
            scores = model.theta[i].copy()
            for j in range(n):
                if j != i:
                    scores += mats[i][j][:, x[j] - 1]
            scores -= np.max(scores)
            probs = np.exp(scores)
            probs /= probs.sum()
            x[i] = 1 + int(np.searchsorted(np.cumsum(probs), uniforms[s, i], side="right"))
            x[i] = min(x[i], k)
        if s >= burn_in and (s - burn_in + 1) % thinning == 0 and rec < N:
            out[rec] = x
            rec += 1
    return out


def delta_unbiasedness(model) -> float:
    """Exact min over sites, symbols, and conditionings of the
    conditional probability; computed by full enumeration."""
    dist = exact_distribution(model)
    k, n = dist.k, dist.n
    grid = dist.probs.reshape((k,) * n)
    worst = 1.0
    for i in range(n):
        denom = grid.sum(axis=i, keepdims=True)
        worst = min(worst, float(np.min(grid / denom)))
    return worst


def parity_mrf(n, S, gamma) -> MrfModel:
    """Model on n+1 variables whose only interaction is a degree-|S|+1
    monomial tying the output bit (index n) to the parity of the bits in
    S: mass proportional to exp(gamma * prod_{i in S} x_i * y).

    The inputs are exactly uniform (every parity of a strict input
    subset is unbiased), while the output agrees with the parity with
    probability sigmoid(2 gamma), making this the canonical hard
    instance for learners restricted to degree <= |S|.
    """
    S = sorted(int(i) for i in S)
    if len(set(S)) != len(S) or (S and (S[0] < 0 or S[-1] >= n)):
        raise ValueError("S must be distinct indices in range(n)")
    mono = tuple(S) + (n,)
    psi = MultilinearPoly(n + 1, len(mono), {mono: float(gamma)})
    return MrfModel(n=n + 1, t=len(mono), psi=psi)
