"""Exact Shannon quantities on finite joint distributions.

All quantities are in bits (log base 2). `JointPmf` is the universal
carrier for sources, channels and derived joints: a dense tensor with one
axis per random variable, nonnegative entries and total mass 1 within
1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exceptions import PmfError

Bits = float

MASS_TOL = 1e-12
# Mutual information values in [-MI_CLAMP, 0) are floating-point noise and
# are clamped to 0 so they cannot flip feasibility checks.
MI_CLAMP = 1e-12


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf over a tuple of finite alphabets."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim < 1:
            raise PmfError("pmf needs at least one axis")
        if np.any(arr < 0):
            raise PmfError("pmf has a negative entry")
        mass = float(arr.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise PmfError(f"pmf mass {mass!r} is not 1 within {MASS_TOL}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def axes(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def n_axes(self) -> int:
        return self.probs.ndim

    def marginal(self, keep: Iterable[int]) -> "JointPmf":
        """Marginal over the listed axes, kept in their original order."""
        keep = sorted(self._check_axes(keep))
        drop = tuple(i for i in range(self.n_axes) if i not in keep)
        return JointPmf(self.probs.sum(axis=drop)) if drop else self

    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    def _check_axes(self, axes: Iterable[int]) -> list[int]:
        axes = list(axes)
        for a in axes:
            if not 0 <= a < self.n_axes:
                raise PmfError(f"axis {a} out of range for {self.n_axes} axes")
        if len(set(axes)) != len(axes):
            raise PmfError("duplicate axis index")
        return axes


def entropy(p: JointPmf) -> Bits:
    """H(p) = -sum p log2 p, with 0 log 0 = 0."""
    flat = p.flat()
    pos = flat[flat > 0]
    return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0


def conditional_entropy(p: JointPmf, given_axes: Iterable[int]) -> Bits:
    """H(remaining | given) = H(all) - H(given)."""
    given = list(given_axes)
    if not given:
        return entropy(p)
    return entropy(p) - entropy(p.marginal(given))


def _clamp_mi(v: float) -> Bits:
    if -MI_CLAMP <= v < 0.0:
        return 0.0
    return v


def mutual_information(p: JointPmf, axes_a: Iterable[int], axes_b: Iterable[int]) -> Bits:
    """I(A;B) = H(A) + H(B) - H(A,B) for disjoint axis groups."""
    a, b = list(axes_a), list(axes_b)
    if set(a) & set(b):
        raise PmfError("axis groups overlap")
    ha = entropy(p.marginal(a))
    hb = entropy(p.marginal(b))
    hab = entropy(p.marginal(a + b))
    return _clamp_mi(ha + hb - hab)


def mutual_information_given(
    p: JointPmf,
    axes_a: Iterable[int],
    axes_b: Iterable[int],
    axes_c: Iterable[int],
) -> Bits:
    """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
    a, b, c = list(axes_a), list(axes_b), list(axes_c)
    groups = [set(a), set(b), set(c)]
    for i in range(3):
        for j in range(i + 1, 3):
            if groups[i] & groups[j]:
                raise PmfError("axis groups overlap")
    hac = entropy(p.marginal(a + c))
    hbc = entropy(p.marginal(b + c))
    habc = entropy(p.marginal(a + b + c))
    hc = entropy(p.marginal(c)) if c else 0.0
    return _clamp_mi(hac + hbc - habc - hc)


def binary_entropy(a: float) -> Bits:
    """h(a) for a in [0,1]; h(0) = h(1) = 0."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"binary_entropy argument {a!r} outside [0,1]")
    if a == 0.0 or a == 1.0:
        return 0.0
    return float(-(a * np.log2(a) + (1.0 - a) * np.log2(1.0 - a)))


def binary_entropy_inv(b: Bits) -> float:
    """Unique preimage of h in [0, 1/2], by bisection to 1e-12."""
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"binary_entropy_inv argument {b!r} outside [0,1]")
    if b == 0.0:
        return 0.0
    if b == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < b:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binary_convolution(a: float, b: float) -> float:
    """a * b := a(1-b) + (1-a)b."""
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError("binary_convolution arguments outside [0,1]")
    return a * (1.0 - b) + (1.0 - a) * b


def mgl_bound(h_v_given_a: Bits, rho: float) -> Bits:
    """Lower bound on H(V xor Z | A) for Z ~ Bern(rho) independent of (V, A).

    Evaluates h(h^-1(H(V|A)) * rho); the classical binary conditional-entropy
    bound for additive binary noise.
    """
    if not 0.0 <= h_v_given_a <= 1.0:
        raise ValueError("conditional entropy argument outside [0,1]")
    if not 0.0 <= rho <= 0.5:
        raise ValueError("rho outside [0, 1/2]")
    alpha = binary_entropy_inv(h_v_given_a)
    return binary_entropy(binary_convolution(alpha, rho))
