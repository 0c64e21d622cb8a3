"""Hot numeric kernels, each in a numba flavour (``*_nb``) and a numpy flavour (``*_np``).

The unsuffixed names are bound at import time according to
:data:`mfot._accel.USE_NUMBA`. Both flavours must agree to rounding.
"""
from math import comb

import numpy as np

from ._accel import njit, pick

# -- multiset pair sums -----------------------------------------------------


@njit
def pair_sums_nb(counts, L):
    S, m = counts.shape
    out = np.zeros(S)
    for s in range(S):
        acc = 0.0
        for i in range(m):
            ni = counts[s, i]
            if ni == 0:
                continue
            if ni >= 2:
                acc += 0.5 * ni * (ni - 1) * L[i, i]
            for j in range(i + 1, m):
                nj = counts[s, j]
                if nj > 0:
                    acc += ni * nj * L[i, j]
        out[s] = acc
    return out


def pair_sums_np(counts, L):
    K = counts.astype(np.float64)
    m = L.shape[0]
    inf = ~np.isfinite(L)
    Lf = np.where(inf, 0.0, L)
    out = 0.5 * (((K @ Lf) * K).sum(axis=1) - K @ np.diag(Lf))
    if inf.any():
        present = (counts > 0).astype(np.float64)
        off = (inf & ~np.eye(m, dtype=bool)).astype(np.float64)
        hit = ((present @ off) * present).sum(axis=1) > 0
        hit |= ((counts >= 2) & np.diag(inf)[None, :]).any(axis=1)
        out[hit] = np.inf
    return out


# -- hypergeometric marginal map -------------------------------------------


def _binom_table(n, k):
    return np.array([[float(comb(a, b)) for b in range(k + 1)] for a in range(n + 1)])


@njit
def _marginal_matrix_nb(big, small, B, denom):
    S, m = big.shape
    T = small.shape[0]
    out = np.zeros((T, S))
    for t in range(T):
        for s in range(S):
            v = 1.0
            for i in range(m):
                ki = small[t, i]
                ni = big[s, i]
                if ki > ni:
                    v = 0.0
                    break
                v *= B[ni, ki]
            out[t, s] = v / denom
    return out


def marginal_matrix_nb(big, small, n, k):
    B = _binom_table(n, k)
    return _marginal_matrix_nb(np.ascontiguousarray(big), np.ascontiguousarray(small), B, B[n, k])


def marginal_matrix_np(big, small, n, k):
    B = _binom_table(n, k)
    out = np.ones((small.shape[0], big.shape[0]))
    for i in range(big.shape[1]):
        ni = big[:, i][None, :]
        ki = small[:, i][:, None]
        out *= np.where(ki <= ni, B[ni, np.minimum(ki, k)], 0.0)
    return out / B[n, k]


# -- sparse column products (CSC) -------------------------------------------


@njit
def csc_tdot_nb(indptr, indices, data, v):
    n = indptr.shape[0] - 1
    out = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for t in range(indptr[j], indptr[j + 1]):
            acc += data[t] * v[indices[t]]
        out[j] = acc
    return out


def csc_tdot_np(indptr, indices, data, v):
    n = indptr.shape[0] - 1
    cols = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(cols, weights=data * v[indices], minlength=n)


# -- steepest-edge reference weights (Goldfarb-Reid update) -----------------


@njit
def se_update_nb(indptr, indices, data, rho, w, gamma, nonbasic, alpha_pq, gamma_q):
    n = indptr.shape[0] - 1
    for j in range(n):
        if not nonbasic[j]:
            continue
        ap = 0.0
        aw = 0.0
        for t in range(indptr[j], indptr[j + 1]):
            ap += data[t] * rho[indices[t]]
            aw += data[t] * w[indices[t]]
        if ap == 0.0:
            continue
        r = ap / alpha_pq
        g = gamma[j] - 2.0 * r * aw + r * r * gamma_q
        lo = 1.0 + r * r
        gamma[j] = g if g > lo else lo


def se_update_np(indptr, indices, data, rho, w, gamma, nonbasic, alpha_pq, gamma_q):
    ap = csc_tdot_np(indptr, indices, data, rho)
    aw = csc_tdot_np(indptr, indices, data, w)
    sel = nonbasic & (ap != 0.0)
    r = ap[sel] / alpha_pq
    g = gamma[sel] - 2.0 * r * aw[sel] + r * r * gamma_q
    gamma[sel] = np.maximum(g, 1.0 + r * r)


pair_sums = pick(pair_sums_nb, pair_sums_np)
marginal_matrix = pick(marginal_matrix_nb, marginal_matrix_np)
csc_tdot = pick(csc_tdot_nb, csc_tdot_np)
se_update = pick(se_update_nb, se_update_np)
