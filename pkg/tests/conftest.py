"""Shared helpers: random model generators and enumeration references.

Reference quantities here are computed by routes independent of the
library code they check (state enumeration over raw log-masses,
difference quotients for derivatives), so tests compare two genuinely
different computations.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
import pytest

from mrflearn import IsingModel, MrfModel, NonBinaryIsing
from mrflearn.polynomials import MultilinearPoly, enumerate_monomials

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def load_schema(name):
    import json

    with open(SCHEMA_DIR / name) as fh:
        return json.load(fh)


def pm1_states(n):
    """All +-1 states, first coordinate slowest, + before -."""
    out = np.array(list(itertools.product([1, -1], repeat=n)), dtype=np.int8)
    return out.reshape(2**n, n)


def brute_conditional_minus(model, i, x_rest):
    """P[Z_i = -1 | rest] straight from two unnormalized masses."""
    x_rest = np.asarray(x_rest, dtype=np.float64)
    z_minus = np.insert(x_rest, i, -1.0)
    z_plus = np.insert(x_rest, i, 1.0)
    if isinstance(model, (IsingModel, MrfModel)):
        m_minus = np.exp(model.log_mass(z_minus))
        m_plus = np.exp(model.log_mass(z_plus))
    else:
        raise TypeError(type(model))
    return m_minus / (m_minus + m_plus)


def difference_derivative(poly, indices, x):
    """Iterated symmetric difference quotient (p(x_i=+1)-p(x_i=-1))/2.

    For multilinear polynomials this equals the coefficient-collection
    derivative exactly, but is computed purely through evaluations.
    """
    indices = tuple(indices)
    if not indices:
        return poly.evaluate(x)
    i, rest = indices[0], indices[1:]
    x_plus = np.array(x, dtype=np.float64)
    x_minus = np.array(x, dtype=np.float64)
    x_plus[i] = 1.0
    x_minus[i] = -1.0
    return 0.5 * (
        difference_derivative(poly, rest, x_plus)
        - difference_derivative(poly, rest, x_minus)
    )


def random_ising(rng, n, scale=0.5, density=0.5, field=0.3):
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                A[i, j] = A[j, i] = rng.uniform(-scale, scale)
    theta = rng.uniform(-field, field, size=n)
    return IsingModel(A, theta)


def random_mrf(rng, n, t, n_terms=4, scale=0.5):
    monos = [m for m in enumerate_monomials(n, t) if m]
    take = min(n_terms, len(monos))
    picks = rng.choice(len(monos), size=take, replace=False)
    coeffs = {monos[int(i)]: rng.uniform(-scale, scale) for i in picks}
    return MrfModel(n=n, t=t, psi=MultilinearPoly(n, t, coeffs))


def random_nonbinary(rng, n, k, scale=0.4, density=0.7, centered=True):
    W = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                mat = rng.uniform(-scale, scale, size=(k, k))
                W[(i, j)] = mat
    theta = rng.uniform(-scale, scale, size=(n, k))
    model = NonBinaryIsing(n=n, k=k, W=W, theta=theta)
    return model.center() if centered else model


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
