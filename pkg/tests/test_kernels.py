"""Numba and numpy kernel flavours must agree; the selected flavour must follow the env flag."""
import os
import subprocess
import sys
from math import comb

import numpy as np
import pytest
import scipy.sparse as sp

from mfot import kernels
from mfot._accel import ENV_FLAG, HAVE_NUMBA
from mfot.multiset import multiset_counts

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _pair_sum_oracle(K, L):
    out = []
    for row in K:
        pts = np.repeat(np.arange(len(row)), row)
        s = 0.0
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                s += L[pts[a], pts[b]]
        out.append(s)
    return np.array(out)


@pytest.mark.parametrize("flavour", ["nb", "np"])
@pytest.mark.parametrize("m,n", [(2, 2), (3, 5), (5, 4)])
def test_pair_sums_against_loop(flavour, m, n, rng):
    K = multiset_counts(m, n)
    L = rng.random((m, m))
    L = np.ascontiguousarray(L + L.T)
    fn = getattr(kernels, f"pair_sums_{flavour}")
    assert np.allclose(fn(K, L), _pair_sum_oracle(K, L), rtol=1e-13)


@pytest.mark.parametrize("flavour", ["nb", "np"])
def test_pair_sums_infinite_entries(flavour):
    K = multiset_counts(2, 3)
    L = np.array([[np.inf, 1.0], [1.0, 0.0]])
    got = getattr(kernels, f"pair_sums_{flavour}")(K, L)
    # (0,0,0) (0,0,1) (0,1,1) (1,1,1)
    assert np.isinf(got[0]) and np.isinf(got[1])
    assert got[2] == 2.0 and got[3] == 0.0


@pytest.mark.parametrize("m,n,k", [(2, 4, 2), (3, 4, 2), (3, 5, 3), (4, 3, 1)])
def test_marginal_matrix_flavours_agree_and_match_hypergeometric(m, n, k):
    big, small = multiset_counts(m, n), multiset_counts(m, k)
    a = kernels.marginal_matrix_nb(big, small, n, k)
    b = kernels.marginal_matrix_np(big, small, n, k)
    assert np.allclose(a, b, rtol=0, atol=1e-15)
    assert a.shape == (small.shape[0], big.shape[0])
    for s_ in range(big.shape[0]):
        for t in range(small.shape[0]):
            ref = np.prod([comb(int(x), int(y)) for x, y in zip(big[s_], small[t])]) / comb(n, k)
            assert a[t, s_] == pytest.approx(ref, abs=1e-15)
    # each column is a probability vector over sub-multisets
    assert np.allclose(a.sum(axis=0), 1.0)


def test_csc_tdot_flavours(rng):
    A = sp.random(40, 300, density=0.05, random_state=1, format="csc")
    v = rng.normal(size=40)
    ref = A.T @ v
    assert np.allclose(kernels.csc_tdot_nb(A.indptr, A.indices, A.data, v), ref, rtol=1e-13)
    assert np.allclose(kernels.csc_tdot_np(A.indptr, A.indices, A.data, v), ref, rtol=1e-13)


def test_se_update_flavours_agree(rng):
    A = sp.random(6, 15, density=0.4, random_state=3, format="csc")
    rho, w = rng.normal(size=6), rng.normal(size=6)
    nonbasic = rng.random(15) < 0.7
    g1 = 1 + rng.random(15)
    g2 = g1.copy()
    kernels.se_update_nb(A.indptr, A.indices, A.data, rho, w, g1, nonbasic, 0.8, 2.5)
    kernels.se_update_np(A.indptr, A.indices, A.data, rho, w, g2, nonbasic, 0.8, 2.5)
    assert np.allclose(g1, g2, rtol=1e-13)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    code = "from mfot._accel import backend; from mfot import kernels; print(backend(), kernels.pair_sums.__name__)"
    env = {**os.environ, ENV_FLAG: flag}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, fn = out.stdout.split()
    assert name == expected
    assert fn.endswith("_np" if expected == "numpy" else "_nb")
