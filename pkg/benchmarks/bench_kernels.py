"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python benchmarks/bench_kernels.py --e2e      # also time whole solves under both backends

The end-to-end mode reruns this script in a subprocess with
MFOT_DISABLE_NUMBA=1, since the backend is chosen at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from mfot import kernels
from mfot._accel import ENV_FLAG, HAVE_NUMBA, backend
from mfot.multiset import multiset_counts


def best_of(fn, *args, repeat=5):
    fn(*args)  # warm-up, also triggers compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases():
    rng = np.random.default_rng(0)
    m, n = 6, 12
    K = multiset_counts(m, n)
    L = rng.random((m, m))
    L = np.ascontiguousarray(L + L.T)
    small = multiset_counts(m, 2)
    A = (rng.random((400, 20000)) < 0.01).astype(float)
    import scipy.sparse as sp

    A = sp.csc_matrix(A)
    v = rng.normal(size=400)
    return {
        "pair_sums": ((K, L), kernels.pair_sums_nb, kernels.pair_sums_np),
        "marginal_matrix": ((K, small, n, 2), kernels.marginal_matrix_nb, kernels.marginal_matrix_np),
        "csc_tdot": ((A.indptr, A.indices, A.data, v), kernels.csc_tdot_nb, kernels.csc_tdot_np),
    }


def run_kernels():
    print(f"numba available: {HAVE_NUMBA}; active backend: {backend()}")
    print(f"{'kernel':<18}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}  agree")
    for name, (args, nb, np_) in kernel_cases().items():
        tn, tp = best_of(nb, *args), best_of(np_, *args)
        agree = np.allclose(nb(*args), np_(*args), rtol=1e-12, atol=1e-14)
        print(f"{name:<18}{tn * 1e3:>12.3f}{tp * 1e3:>12.3f}{tp / tn:>10.1f}  {agree}")


def e2e_once():
    from mfot.costs import gaussian
    from mfot.measures import DiscreteMeasure, SupportGrid
    from mfot.mmot import MmotProblem, solve_mmot

    mu = DiscreteMeasure(SupportGrid.line(np.arange(4.0)), np.full(4, 0.25))
    c = gaussian(1.0)
    solve_mmot(MmotProblem(mu, 3, c))  # warm-up
    t0 = time.perf_counter()
    vals = [solve_mmot(MmotProblem(mu, n, c, form)).value for n in range(2, 11) for form in ("direct", "reduced")]
    return {"backend": backend(), "seconds": time.perf_counter() - t0, "values": vals}


def run_e2e():
    out = {}
    for flag in ("0", "1"):
        env = {**os.environ, ENV_FLAG: flag}
        p = subprocess.run([sys.executable, __file__, "--e2e-child"], env=env, capture_output=True, text=True,
                           check=True)
        r = json.loads(p.stdout)
        out[r["backend"]] = r
        print(f"end-to-end N=2..10, 4 points, both formulations: {r['backend']:<6} {r['seconds']:.3f} s")
    if len(out) == 2:
        a, b = out.values()
        print("values agree:", np.allclose(a["values"], b["values"], rtol=0, atol=1e-12))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--e2e", action="store_true")
    ap.add_argument("--e2e-child", action="store_true", help=argparse.SUPPRESS)
    a = ap.parse_args()
    if a.e2e_child:
        print(json.dumps(e2e_once()))
    else:
        run_kernels()
        if a.e2e:
            run_e2e()
