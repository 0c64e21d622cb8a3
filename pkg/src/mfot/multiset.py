"""Size-n multisets over m labelled points.

Multisets are ordered lexicographically as sorted index tuples, the order of
``itertools.combinations_with_replacement(range(m), n)``. A multiset is stored
as its count vector.
"""
from functools import lru_cache
from itertools import chain, combinations_with_replacement
from math import comb, lgamma

import numpy as np


def n_multisets(m, n):
    return comb(m + n - 1, n)


@lru_cache(maxsize=128)
def multiset_counts(m, n):
    """Count vectors, shape ``(C(m+n-1, n), m)``, in lexicographic order. Read-only."""
    S = n_multisets(m, n)
    if n == 0:
        out = np.zeros((1, m), dtype=np.int64)
    else:
        flat = np.fromiter(
            chain.from_iterable(combinations_with_replacement(range(m), n)),
            dtype=np.int64,
            count=S * n,
        ).reshape(S, n)
        out = np.zeros((S, m), dtype=np.int64)
        rows = np.repeat(np.arange(S), n)
        np.add.at(out, (rows, flat.ravel()), 1)
    out.flags.writeable = False
    return out


def multinomial(counts):
    """Number of distinct orderings of each multiset, ``n! / prod(n_i!)``."""
    counts = np.asarray(counts)
    n = int(counts[0].sum()) if counts.ndim == 2 else int(counts.sum())
    lg = np.vectorize(lgamma, otypes=[float])
    out = np.exp(lgamma(n + 1) - lg(counts + 1).sum(axis=-1))
    return np.rint(out) if n <= 20 else out


@lru_cache(maxsize=128)
def _rank_table(m, n):
    # T[L, v] = number of length-L multisets with every entry >= v
    T = np.zeros((n + 1, m), dtype=np.int64)
    for L in range(n + 1):
        for v in range(m):
            T[L, v] = comb(m - v + L - 1, L)
    # P[L, v] = sum_{u < v} T[L, u]
    P = np.zeros((n + 1, m + 1), dtype=np.int64)
    P[:, 1:] = np.cumsum(T, axis=1)
    return P


def rank_sorted(tuples, m):
    """Lexicographic rank of each row of ``tuples`` (sorted ascending) among size-n multisets."""
    tuples = np.atleast_2d(np.asarray(tuples, dtype=np.int64))
    n = tuples.shape[1]
    P = _rank_table(m, n)
    rank = np.zeros(tuples.shape[0], dtype=np.int64)
    prev = np.zeros(tuples.shape[0], dtype=np.int64)
    for p in range(n):
        L = n - p - 1
        v = tuples[:, p]
        rank += P[L, v] - P[L, prev]
        prev = v
    return rank


def rank_counts(counts):
    counts = np.atleast_2d(np.asarray(counts, dtype=np.int64))
    m = counts.shape[1]
    tuples = np.stack([np.repeat(np.arange(m), c) for c in counts])
    return rank_sorted(tuples, m)


def pair_index(m):
    """Row/column indices (i <= j) of the size-2 multisets in lexicographic order."""
    K = multiset_counts(m, 2)
    idx = np.array([np.repeat(np.arange(m), c) for c in K])
    return idx[:, 0], idx[:, 1]
