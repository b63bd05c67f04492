"""Benchmark the JIT-compiled typicality kernels against the numpy fallback.

The batch membership test dominates simulation runtime: every decode pass
scores all M codebook rows against a received sequence.  Run:

    python benchmarks/bench_kernels.py

Results on a given machine vary; the JIT path is typically 5-30x faster on
the M = 2^18 workload.  Setting COOPCAST_NO_NUMBA=1 makes the package use
the numpy path everywhere.
"""

import time

import numpy as np

from coopcast import _kernels
from coopcast.info import JointPmf
from coopcast.typicality import MembershipTest


def make_workload(m=1 << 18, n=16, seed=7):
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    rows = (gen.random((m, n)) < 0.5).astype(np.int64)
    given = (gen.random(n) < 0.5).astype(np.int64)
    joint = JointPmf(np.array([[0.45, 0.05], [0.05, 0.45]]))
    test = MembershipTest.build(joint, n, eps=1.75)
    return rows, given, test


def bench(fn, rows, given, test, repeats=5):
    fn(rows, given, test.nb, test.lo, test.hi)  # warm-up / compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(rows, given, test.nb, test.lo, test.hi)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rows, given, test = make_workload()
    m, n = rows.shape
    print(f"workload: {m} rows x {n} symbols, {test.lo.size} joint cells")

    t_np, out_np = bench(_kernels.typical_mask_numpy, rows, given, test)
    print(f"numpy fallback : {t_np * 1e3:8.2f} ms  ({m / t_np / 1e6:7.1f} Mrow/s)")

    if _kernels.typical_mask_numba is not None:
        t_nb, out_nb = bench(_kernels.typical_mask_numba, rows, given, test)
        print(f"numba njit     : {t_nb * 1e3:8.2f} ms  ({m / t_nb / 1e6:7.1f} Mrow/s)")
        print(f"speedup        : {t_np / t_nb:8.2f}x")
        assert np.array_equal(out_np, out_nb), "kernel paths disagree"
        print("outputs identical: yes")
    else:
        print("numba unavailable or disabled (COOPCAST_NO_NUMBA); JIT path skipped")


if __name__ == "__main__":
    main()
