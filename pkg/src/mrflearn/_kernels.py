"""Compiled inner loops: multiplicative-weight runs and Gibbs sweeps.

These kernels are deliberately scalar-looped; summation order is fixed so
results are bit-reproducible run to run.  Randomness never lives inside a
kernel: Gibbs kernels consume pre-drawn uniforms.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def mw_run(F, Y, lam, beta, cand_steps):
    """Run T multiplicative-weight updates over implicitly doubled features.

    F is the (T, D) raw feature matrix in [-1, 1]; the learner operates on
    the 2D+1 dimensional expansion (F, -F, 0) without materializing it.
    Each step multiplies weight j by beta**((1 + g*f_j)/2) with
    g = u(lam p.x) - y; since the per-coordinate factor only depends on
    f_j, features in {-1, 0, +1} (every reduction in this package) reuse
    three shared exponentials per step instead of one per coordinate.
    Weights stay in linear space and are rescaled whenever their sum
    leaves [1e-30, 1e30]; rescaling divides every weight by the same
    value, so normalized quantities are unaffected.

    For each step index s in cand_steps (1-based, ascending), the
    normalized weight vector in force at step s (i.e. derived from the
    weights after s-1 updates) is recorded.  Returns (P, w) where P has
    shape (len(cand_steps), 2D+1).
    """
    T, D = F.shape
    d = 2 * D + 1
    w = np.full(d, 1.0 / d)
    lnb = np.log(beta)
    b2 = np.exp(0.5 * lnb)
    nc = cand_steps.shape[0]
    P = np.empty((nc, d))
    ci = 0
    for t in range(T):
        s = 0.0
        for j in range(d):
            s += w[j]
        if s < 1e-30 or s > 1e30:
            for j in range(d):
                w[j] /= s
            s = 1.0
        if ci < nc and cand_steps[ci] == t + 1:
            for j in range(d):
                P[ci, j] = w[j] / s
            ci += 1
        dot = 0.0
        for j in range(D):
            dot += (w[j] - w[D + j]) * F[t, j]
        dot /= s
        g = _sigmoid(lam * dot) - Y[t]
        half_g_lnb = 0.5 * lnb * g
        c_pos = np.exp(half_g_lnb)
        c_neg = 1.0 / c_pos
        for j in range(D):
            f = F[t, j]
            if f == 1.0:
                m_pos = c_pos
                m_neg = c_neg
            elif f == -1.0:
                m_pos = c_neg
                m_neg = c_pos
            elif f == 0.0:
                m_pos = 1.0
                m_neg = 1.0
            else:
                m_pos = np.exp(half_g_lnb * f)
                m_neg = 1.0 / m_pos
            w[j] *= b2 * m_pos
            w[D + j] *= b2 * m_neg
        w[2 * D] *= b2
    return P, w


@njit(cache=True)
def gibbs_sweep_ising(A, theta, z, uniforms, sweep0, burn_in, thinning, out, rec0):
    """Run len(uniforms) systematic-scan sweeps of an Ising Gibbs chain.

    z is the current +-1 state (modified in place); uniforms has shape
    (sweeps, n).  Sweeps are numbered globally starting at sweep0; after
    global sweep s (0-based), the state is recorded into out when
    s >= burn_in and (s - burn_in + 1) % thinning == 0.  Returns the
    updated record count.
    """
    n = z.shape[0]
    sweeps = uniforms.shape[0]
    rec = rec0
    for k in range(sweeps):
        for i in range(n):
            field = 0.0
            for j in range(n):
                field += A[i, j] * z[j]
            p_minus = _sigmoid(-2.0 * field - 2.0 * theta[i])
            if uniforms[k, i] < p_minus:
                z[i] = -1.0
            else:
                z[i] = 1.0
        s = sweep0 + k
        if s >= burn_in and (s - burn_in + 1) % thinning == 0:
            if rec < out.shape[0]:
                for i in range(n):
                    out[rec, i] = z[i]
                rec += 1
    return rec


@njit(cache=True)
def gibbs_sweep_poly(
    site_start, coeffs, idx_start, idx_flat, z, uniforms, sweep0, burn_in, thinning, out, rec0
):
    """Gibbs sweeps for a log-polynomial density on {-1,+1}^n.

    The conditional at site i is sigmoid(-2 * d_i(z)) for the site's
    derivative polynomial d_i, passed in flattened form: the terms of
    d_i are coeffs[site_start[i]:site_start[i+1]], and term m multiplies
    the variables idx_flat[idx_start[m]:idx_start[m+1]].
    """
    n = z.shape[0]
    sweeps = uniforms.shape[0]
    rec = rec0
    for k in range(sweeps):
        for i in range(n):
            field = 0.0
            for m in range(site_start[i], site_start[i + 1]):
                term = coeffs[m]
                for q in range(idx_start[m], idx_start[m + 1]):
                    term *= z[idx_flat[q]]
                field += term
            p_minus = _sigmoid(-2.0 * field)
            if uniforms[k, i] < p_minus:
                z[i] = -1.0
            else:
                z[i] = 1.0
        s = sweep0 + k
        if s >= burn_in and (s - burn_in + 1) % thinning == 0:
            if rec < out.shape[0]:
                for i in range(n):
                    out[rec, i] = z[i]
                rec += 1
    return rec
