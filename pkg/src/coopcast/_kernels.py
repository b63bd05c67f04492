"""Hot numeric kernels.

The Monte Carlo decoders test letter-typicality of every codebook row
against a fixed received sequence, which dominates runtime.  The kernels
here are JIT-compiled with numba when available; setting the environment
variable COOPCAST_NO_NUMBA=1 forces the pure-numpy implementations (same
results, slower).  `benchmarks/bench_kernels.py` compares both paths.

A membership test is precompiled into integer count bounds: row m passes
iff for every merged cell c the count N_c(row_m, given) lies in
[lo[c], hi[c]].  Cell code of position i is rows[m, i] * nb + given[i].
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("COOPCAST_NO_NUMBA", "").strip().lower()
USE_NUMBA = _flag not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False


def typical_mask_numpy(rows: np.ndarray, given: np.ndarray, nb: int,
                       lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    codes = rows * nb + given[None, :]
    ok = np.ones(rows.shape[0], dtype=np.bool_)
    for c in range(lo.size):
        cnt = (codes == c).sum(axis=1)
        ok &= (cnt >= lo[c]) & (cnt <= hi[c])
    return ok


def first_equal_row_numpy(rows: np.ndarray, seq: np.ndarray) -> int:
    hits = np.nonzero((rows == seq[None, :]).all(axis=1))[0]
    return int(hits[0]) if hits.size else -1


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _typical_mask_njit(rows, given, nb, lo, hi, out):  # pragma: no cover
        n_rows, n = rows.shape
        n_cells = lo.size
        cnt = np.zeros(n_cells, dtype=np.int64)
        for m in range(n_rows):
            for c in range(n_cells):
                cnt[c] = 0
            for i in range(n):
                cnt[rows[m, i] * nb + given[i]] += 1
            ok = True
            for c in range(n_cells):
                if cnt[c] < lo[c] or cnt[c] > hi[c]:
                    ok = False
                    break
            out[m] = ok

    @njit(cache=True, nogil=True)
    def _first_equal_row_njit(rows, seq):  # pragma: no cover
        n_rows, n = rows.shape
        for m in range(n_rows):
            hit = True
            for i in range(n):
                if rows[m, i] != seq[i]:
                    hit = False
                    break
            if hit:
                return m
        return -1

    def typical_mask_numba(rows, given, nb, lo, hi):
        out = np.empty(rows.shape[0], dtype=np.bool_)
        _typical_mask_njit(
            np.ascontiguousarray(rows, dtype=np.int64),
            np.ascontiguousarray(given, dtype=np.int64),
            nb, lo, hi, out,
        )
        return out

    def first_equal_row_numba(rows, seq):
        return int(_first_equal_row_njit(
            np.ascontiguousarray(rows, dtype=np.int64),
            np.ascontiguousarray(seq, dtype=np.int64),
        ))

    typical_mask = typical_mask_numba
    first_equal_row = first_equal_row_numba
else:
    typical_mask_numba = None
    first_equal_row_numba = None
    typical_mask = typical_mask_numpy
    first_equal_row = first_equal_row_numpy
