"""Deterministic maximization over the probability simplex and over
row-stochastic matrices.

Strategy: a coarse exhaustive grid seeds multi-start projected gradient
ascent (central finite differences, diminishing steps, accept-if-better),
followed by a deterministic pairwise-exchange polish that handles the
kinks of min-of-terms objectives.  Identical (objective, options) inputs
produce bit-identical results; restart outcomes are merged by value and
then lexicographically smallest argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rng as rng_mod

FD_STEP = 1e-5


@dataclass(frozen=True)
class OptOptions:
    grid_step: float = 0.05
    restarts: int = 8
    max_iters: int = 2000
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.grid_step <= 0.5:
            raise ValueError("grid_step must lie in (0, 0.5]")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / idx > 0
    rho = idx[cond][-1]
    theta = (1.0 - css[rho - 1]) / rho
    return np.maximum(v + theta, 0.0)


def simplex_grid(dim: int, step: float) -> np.ndarray:
    """All pmfs on `dim` symbols with entries that are multiples of ~step."""
    m = max(1, round(1.0 / step))
    combos: list[list[int]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            combos.append(prefix + [remaining])
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], m, dim)
    return np.asarray(combos, dtype=np.float64) / m


def _eval(f: Callable[[np.ndarray], float], p: np.ndarray) -> float:
    v = float(f(p))
    if not math.isfinite(v):
        raise ValueError(f"objective returned non-finite value {v!r}")
    return v


def _better(val: float, point: np.ndarray, best_val: float, best_point: np.ndarray | None) -> bool:
    if best_point is None or val > best_val + 1e-15:
        return True
    if val < best_val - 1e-15:
        return False
    # value tie: lexicographically smallest argmax wins
    return tuple(point.ravel()) < tuple(best_point.ravel())


def _normalized(f, p):
    s = p.sum()
    return _eval(f, p / s if s > 0 else np.full_like(p, 1.0 / p.size))


def _ascend_simplex(f, start: np.ndarray, opts: OptOptions) -> tuple[np.ndarray, float]:
    p = start.copy()
    fp = _eval(f, p)
    step = max(opts.grid_step, 0.05)
    iters = 0
    while iters < opts.max_iters and step > 1e-9:
        g = np.zeros_like(p)
        for i in range(p.size):
            e = np.zeros_like(p)
            e[i] = FD_STEP
            g[i] = (_normalized(f, np.maximum(p + e, 0.0)) -
                    _normalized(f, np.maximum(p - e, 0.0))) / (2 * FD_STEP)
            iters += 1
        g -= g.mean()
        norm = np.linalg.norm(g)
        if norm < 1e-14:
            break
        q = project_simplex(p + step * g / norm)
        fq = _eval(f, q)
        iters += 1
        if fq > fp + 1e-15:
            p, fp = q, fq
        else:
            step *= 0.5
    return p, fp


def _polish_exchanges(f, start: np.ndarray, fstart: float, opts: OptOptions) -> tuple[np.ndarray, float]:
    """Deterministic pairwise mass exchanges with shrinking step."""
    p = start.copy()
    fp = fstart
    h = opts.grid_step
    while h > opts.tol * 1e-3:
        improved = True
        while improved:
            improved = False
            for i in range(p.size):
                for j in range(p.size):
                    if i == j or p[j] < h - 1e-15:
                        continue
                    q = p.copy()
                    q[i] += h
                    q[j] -= h
                    fq = _eval(f, q)
                    if fq > fp + 1e-15:
                        p, fp = q, fq
                        improved = True
        h *= 0.5
    return p, fp


def maximize_simplex(f: Callable[[np.ndarray], float], dim: int,
                     opts: OptOptions | None = None) -> tuple[np.ndarray, float]:
    """Maximize f over pmfs of length `dim`; returns (argmax, value)."""
    opts = opts or OptOptions()
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim == 1:
        p = np.ones(1)
        return p, _eval(f, p)

    grid = simplex_grid(dim, opts.grid_step)
    vals = np.array([_eval(f, g) for g in grid])
    order = np.lexsort(tuple(grid[:, i] for i in range(dim - 1, -1, -1)) + (-vals,))
    seeds = [grid[i] for i in order[: max(1, opts.restarts)]]

    best_p, best_v = None, -math.inf
    for s in seeds:
        p, v = _ascend_simplex(f, s, opts)
        p, v = _polish_exchanges(f, p, v, opts)
        if _better(v, p, best_v, best_p):
            best_p, best_v = p, v
    return best_p, best_v


def _project_rows(mat: np.ndarray) -> np.ndarray:
    return np.vstack([project_simplex(r) for r in mat])


def _row_stochastic_seeds(rows: int, cols: int, opts: OptOptions,
                          extra: Sequence[np.ndarray] = ()) -> list[np.ndarray]:
    seeds = [np.asarray(e, dtype=np.float64) for e in extra]
    seeds.append(np.full((rows, cols), 1.0 / cols))
    eye = np.zeros((rows, cols))
    for r in range(rows):
        eye[r, r % cols] = 1.0
    seeds.append(eye)
    if rows * (cols - 1) <= 4:
        per_row = simplex_grid(cols, max(opts.grid_step, 0.25))

        def rec(r, acc):
            if r == rows:
                seeds.append(np.vstack(acc))
                return
            for g in per_row:
                rec(r + 1, acc + [g])

        if per_row.shape[0] ** rows <= 2000:
            rec(0, [])
    gen = rng_mod.stream(opts.seed, 0, "optimizer")
    for _ in range(opts.restarts):
        seeds.append(_project_rows(gen.random((rows, cols))))
    return seeds


def maximize_stochastic(f: Callable[[np.ndarray], float], rows: int, cols: int,
                        opts: OptOptions | None = None,
                        extra_seeds: Sequence[np.ndarray] = ()) -> tuple[np.ndarray, float]:
    """Maximize f over row-stochastic (rows x cols) matrices."""
    opts = opts or OptOptions()
    if rows < 1 or cols < 1:
        raise ValueError("matrix shape must be positive")
    if cols == 1:
        m = np.ones((rows, 1))
        return m, _eval(f, m)

    best_m, best_v = None, -math.inf
    for seed_m in _row_stochastic_seeds(rows, cols, opts, extra_seeds):
        m, v = _ascend_rows(f, seed_m, opts)
        m, v = _polish_rows(f, m, v, opts)
        if _better(v, m, best_v, best_m):
            best_m, best_v = m, v
    return best_m, best_v


def _ascend_rows(f, start: np.ndarray, opts: OptOptions) -> tuple[np.ndarray, float]:
    m = start.copy()
    fm = _eval(f, m)
    step = max(opts.grid_step, 0.05)
    iters = 0
    while iters < opts.max_iters and step > 1e-9:
        g = np.zeros_like(m)
        for r in range(m.shape[0]):
            for c in range(m.shape[1]):
                e = np.zeros_like(m)
                e[r, c] = FD_STEP
                up = m + e
                dn = np.maximum(m - e, 0.0)
                g[r, c] = (_eval(f, up / up.sum(axis=1, keepdims=True)) -
                           _eval(f, dn / np.maximum(dn.sum(axis=1, keepdims=True), 1e-300))) / (2 * FD_STEP)
                iters += 1
        g -= g.mean(axis=1, keepdims=True)
        norm = np.linalg.norm(g)
        if norm < 1e-14:
            break
        q = _project_rows(m + step * g / norm)
        fq = _eval(f, q)
        iters += 1
        if fq > fm + 1e-15:
            m, fm = q, fq
        else:
            step *= 0.5
    return m, fm


def _polish_rows(f, start: np.ndarray, fstart: float, opts: OptOptions) -> tuple[np.ndarray, float]:
    m = start.copy()
    fm = fstart
    h = opts.grid_step
    while h > opts.tol * 1e-3:
        improved = True
        while improved:
            improved = False
            for r in range(m.shape[0]):
                for i in range(m.shape[1]):
                    for j in range(m.shape[1]):
                        if i == j or m[r, j] < h - 1e-15:
                            continue
                        q = m.copy()
                        q[r, i] += h
                        q[r, j] -= h
                        fq = _eval(f, q)
                        if fq > fm + 1e-15:
                            m, fm = q, fq
                            improved = True
        h *= 0.5
    return m, fm
