"""Sparse multilinear polynomials over {-1,+1}^n.

A polynomial is a finite sum  sum_I  c_I * prod_{i in I} x_i  where each
monomial I is a subset of variable indices.  This is the shared
representation for interaction energies of binary graphical models and
for the derivative polynomials their learners estimate.

Monomials are canonical tuples of strictly increasing indices; the empty
tuple () is the constant term.  The canonical ordering of monomials is
(size, lexicographic), which fixes the feature order used everywhere a
polynomial is flattened into a weight vector.
"""

from __future__ import annotations

import itertools
import json
import math
from types import MappingProxyType

import numpy as np

# Coefficients whose magnitude falls below this fraction of the largest
# coefficient (or of 1.0, whichever is larger) are treated as zero.
ZERO_REL_TOL = 1e-9


def canonical_monomial(indices) -> tuple[int, ...]:
    """Normalize an index collection into a sorted, duplicate-free tuple."""
    mono = tuple(sorted(int(i) for i in indices))
    for a, b in zip(mono, mono[1:]):
        if a == b:
            raise ValueError(f"monomial has repeated index {a}")
    if mono and mono[0] < 0:
        raise ValueError(f"negative variable index in monomial {mono}")
    return mono


def enumerate_monomials(n: int, max_deg: int) -> list[tuple[int, ...]]:
    """All subsets of range(n) of size <= max_deg in (size, lex) order.

    The order is deterministic and stable: first by subset size, then
    lexicographically within a size.  Length is sum_{l<=max_deg} C(n,l).
    """
    if max_deg > n:
        raise ValueError(f"max_deg={max_deg} exceeds n={n}")
    if max_deg < 0:
        raise ValueError("max_deg must be >= 0")
    out: list[tuple[int, ...]] = []
    for size in range(max_deg + 1):
        out.extend(itertools.combinations(range(n), size))
    return out


def sigmoid(z):
    """Numerically stable logistic function 1/(1+exp(-z)).

    Evaluated through exp(-|z|), which never overflows: the two sign
    branches 1/(1+e^-z) and e^z/(1+e^z) share that one exponential.
    Safe for |z| well beyond 700.  Accepts scalars or ndarrays.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z_arr))
    out = np.where(z_arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if np.isscalar(z) or out.ndim == 0:
        return float(out)
    return out


class MultilinearPoly:
    """Immutable sparse multilinear polynomial in n variables, degree <= t.

    Parameters
    ----------
    n : int
        Number of variables; all monomial indices must lie in range(n).
    t : int
        Maximum allowed monomial size.
    coeffs : mapping, optional
        Map from index collections to real coefficients.  Keys are
        canonicalized; entries that are zero (relative tolerance
        ``ZERO_REL_TOL``) are dropped.
    """

    __slots__ = ("n", "t", "_coeffs")

    def __init__(self, n, t, coeffs=None):
        if n < 0 or t < 0:
            raise ValueError("n and t must be non-negative")
        cleaned: dict[tuple[int, ...], float] = {}
        items = coeffs.items() if coeffs else ()
        for key, value in items:
            mono = canonical_monomial(key)
            if len(mono) > t:
                raise ValueError(f"monomial {mono} exceeds degree bound t={t}")
            if mono and mono[-1] >= n:
                raise ValueError(f"monomial {mono} out of range for n={n}")
            value = float(value)
            if mono in cleaned:
                raise ValueError(f"duplicate monomial {mono}")
            cleaned[mono] = value
        if cleaned:
            cutoff = ZERO_REL_TOL * max(1.0, max(abs(v) for v in cleaned.values()))
            cleaned = {m: c for m, c in cleaned.items() if abs(c) > cutoff}
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "t", int(t))
        object.__setattr__(self, "_coeffs", MappingProxyType(cleaned))

    def __setattr__(self, name, value):
        raise AttributeError("MultilinearPoly is immutable")

    # -- accessors ---------------------------------------------------------

    @property
    def coeffs(self):
        """Read-only view of the stored (monomial -> coefficient) map."""
        return self._coeffs

    def coeff(self, indices) -> float:
        """Coefficient of a monomial, 0.0 if absent."""
        return self._coeffs.get(canonical_monomial(indices), 0.0)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(c) for c in self._coeffs.values()))

    def degree_slice_l1(self, ell: int) -> float:
        """Sum of |coefficient| over monomials of size exactly ell."""
        if not 0 <= ell <= self.t:
            raise ValueError(f"ell={ell} outside [0, t={self.t}]")
        return float(sum(abs(c) for m, c in self._coeffs.items() if len(m) == ell))

    def sorted_terms(self) -> list[tuple[tuple[int, ...], float]]:
        """Terms in canonical (size, lex) order."""
        return sorted(self._coeffs.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def __len__(self):
        return len(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return (
            self.n == other.n
            and self.t == other.t
            and dict(self._coeffs) == dict(other._coeffs)
        )

    def __hash__(self):
        return hash((self.n, self.t, tuple(self.sorted_terms())))

    def __repr__(self):
        terms = ", ".join(f"{m}: {c:.6g}" for m, c in self.sorted_terms()[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"MultilinearPoly(n={self.n}, t={self.t}, {{{terms}{more}}})"

    # -- evaluation --------------------------------------------------------

    def evaluate(self, x) -> float:
        """Evaluate at a single point x of length n."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n},)")
        total = 0.0
        for mono, c in self._coeffs.items():
            term = c
            for i in mono:
                term *= x[i]
            total += term
        return float(total)

    def evaluate_many(self, X) -> np.ndarray:
        """Evaluate at every row of an (m, n) array of points."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValueError(f"points have shape {X.shape}, expected (m, {self.n})")
        out = np.zeros(X.shape[0])
        for mono, c in self._coeffs.items():
            if mono:
                out += c * np.prod(X[:, mono], axis=1)
            else:
                out += c
        return out

    # -- calculus on coefficients -------------------------------------------

    def partial_derivative(self, indices) -> "MultilinearPoly":
        """Iterated partial derivative with respect to a set of variables.

        For I = indices, returns the polynomial with coefficient
        q(J) = c(J u I) for every J disjoint from I: the coefficients of
        all monomials containing I, re-keyed by their remainder.
        """
        I = canonical_monomial(indices)
        if not I:
            raise ValueError("derivative index set must be nonempty")
        if I[-1] >= self.n:
            raise ValueError(f"index {I[-1]} out of range for n={self.n}")
        iset = set(I)
        new = {}
        for mono, c in self._coeffs.items():
            if iset.issubset(mono):
                new[tuple(i for i in mono if i not in iset)] = c
        return MultilinearPoly(self.n, max(0, self.t - len(I)), new)

    def maximal_monomials(self) -> list[tuple[int, ...]]:
        """Stored monomials not strictly contained in another stored monomial."""
        monos = list(self._coeffs.keys())
        sets = [set(m) for m in monos]
        out = []
        for i, m in enumerate(monos):
            mi = sets[i]
            if not any(i != j and mi < sets[j] for j in range(len(monos))):
                out.append(m)
        return sorted(out, key=lambda m: (len(m), m))

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "terms": [
                {"indices": list(m), "coeff": c} for m, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json_dict(cls, d) -> "MultilinearPoly":
        coeffs = {tuple(term["indices"]): term["coeff"] for term in d["terms"]}
        return cls(d["n"], d["t"], coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, s: str) -> "MultilinearPoly":
        return cls.from_json_dict(json.loads(s))

    def allclose(self, other: "MultilinearPoly", atol=1e-12) -> bool:
        keys = set(self._coeffs) | set(other._coeffs)
        return all(
            math.isclose(self.coeff(k), other.coeff(k), rel_tol=0.0, abs_tol=atol)
            for k in keys
        )
