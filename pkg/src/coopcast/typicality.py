"""Letter-typical sets: membership tests, counting, and analytic brackets.

A sequence a is eps-typical for P if |N(a'|a)/n - P(a')| <= eps * P(a')
for every symbol a'.  Symbols outside the support must not occur.  Joint
typicality applies the same test to pair counts; the conditional typical
set of (A,B) given b is exactly the set of a making the pair jointly
typical.

Membership comparisons are done on integer counts against precomputed
bounds with a 1e-12 * n slack toward acceptance, so exact boundaries do
not flap under floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ParamError
from .info import JointPmf, entropy, mutual_information

SLACK = 1e-12


def symbol_count(seq: np.ndarray, symbol: int) -> int:
    """Number of occurrences of `symbol` in `seq`."""
    return int((np.asarray(seq) == symbol).sum())


def count_bounds(flat_pmf: np.ndarray, n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer count bounds [lo, hi] per cell for eps-typicality at length n."""
    if eps <= 0:
        raise ParamError("eps must be positive")
    target = n * flat_pmf
    lo = np.ceil(target * (1.0 - eps) - n * SLACK - 1e-9).astype(np.int64)
    hi = np.floor(target * (1.0 + eps) + n * SLACK + 1e-9).astype(np.int64)
    np.maximum(lo, 0, out=lo)
    return lo, hi


@dataclass(frozen=True)
class MembershipTest:
    """Precompiled typicality test for one reference joint and tolerance.

    `rows` symbols index the first axis group of the reference pmf; the
    fixed `given` sequence carries the remaining axes merged row-major.
    """

    nb: int
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, p: JointPmf, n: int, eps: float, n_row_axes: int = 1) -> "MembershipTest":
        if not 1 <= n_row_axes <= p.n_axes:
            raise ParamError("bad axis split")
        nb = int(np.prod(p.axes[n_row_axes:], dtype=np.int64)) if n_row_axes < p.n_axes else 1
        lo, hi = count_bounds(p.flat(), n, eps)
        return cls(nb=nb, lo=lo, hi=hi)

    def mask(self, rows: np.ndarray, given: np.ndarray | None) -> np.ndarray:
        """Boolean pass/fail per row of a (M, n) symbol matrix."""
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        if given is None:
            given = np.zeros(rows.shape[1], dtype=np.int64)
        return _kernels.typical_mask(rows, np.ascontiguousarray(given, dtype=np.int64),
                                     self.nb, self.lo, self.hi)

    def one(self, row: np.ndarray, given: np.ndarray | None = None) -> bool:
        return bool(self.mask(np.asarray(row, dtype=np.int64)[None, :], given)[0])


def merge_symbols(seqs: tuple[np.ndarray, ...], sizes: tuple[int, ...]) -> np.ndarray:
    """Merge parallel symbol sequences into one row-major product alphabet."""
    out = np.zeros(len(seqs[0]), dtype=np.int64)
    for s, size in zip(seqs, sizes):
        out = out * size + np.asarray(s, dtype=np.int64)
    return out


def is_typical(seq: np.ndarray, p: JointPmf, eps: float) -> bool:
    """Single-sequence typicality against a one-axis pmf."""
    if p.n_axes != 1:
        raise ParamError("is_typical wants a single-axis pmf")
    seq = np.asarray(seq, dtype=np.int64)
    return MembershipTest.build(p, len(seq), eps).one(seq, None)


def is_jointly_typical(seq_a: np.ndarray, seq_b: np.ndarray, p: JointPmf, eps: float) -> bool:
    """Pair typicality; first axis group is A (one axis), the rest are B."""
    seq_a = np.asarray(seq_a, dtype=np.int64)
    seq_b = np.asarray(seq_b, dtype=np.int64)
    if len(seq_a) != len(seq_b):
        raise ParamError("sequences must have equal length")
    return MembershipTest.build(p, len(seq_a), eps, n_row_axes=1).one(seq_a, seq_b)


def is_cond_typical(seq_a: np.ndarray, seq_b: np.ndarray, p: JointPmf, eps: float) -> bool:
    """Membership of a in the conditional typical set of (A,B) given b."""
    return is_jointly_typical(seq_a, seq_b, p, eps)


@dataclass(frozen=True)
class BoundBracket:
    """Probability bracket [lower, upper] with an exponential correction term."""

    lower: float
    upper: float
    correction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ParamError("bracket must satisfy 0 <= lower <= upper <= 1")


def sequence_prob_bracket(p: JointPmf, n: int, eps: float) -> tuple[BoundBracket, float]:
    """Per-sequence probability bracket for typical sequences, plus the
    lower bound on the total mass of the typical set.

    For an iid length-n draw from p with 0 < eps <= min-support, every
    eps-typical sequence has probability in
    [2^{-nH(1+eps)}, 2^{-nH(1-eps)}], and the typical set has mass at
    least 1 - 2|A| exp(-n eps^2 mu).
    """
    flat = p.flat()
    mu = float(flat[flat > 0].min())
    if not 0 < eps <= mu:
        raise ParamError(f"eps must lie in (0, {mu}]")
    h = entropy(p)
    bracket = BoundBracket(
        lower=min(1.0, 2.0 ** (-n * h * (1.0 + eps))),
        upper=min(1.0, 2.0 ** (-n * h * (1.0 - eps))),
    )
    mass_lo = max(0.0, 1.0 - 2.0 * flat.size * math.exp(-n * eps * eps * mu))
    return bracket, mass_lo


def conditional_typical_bracket(
    p_ab: JointPmf, n: int, eps: float, eps1: float, n_a_axes: int = 1
) -> BoundBracket:
    """Bounds on Pr[A in T_eps(P_AB | b)] for A drawn iid from the marginal,
    given any eps1-typical b, with 0 < eps1 < eps <= min joint support.

    upper = 2^{-n(I(A;B) - 2 eps H(A))}
    lower = (1 - correction) 2^{-n(I(A;B) + 2 eps H(A))}
    correction = 2|A||B| exp(-2n(1-eps1) (eps-eps1)^2 / (1+eps1) mu_AB^2)
    """
    flat = p_ab.flat()
    mu = float(flat[flat > 0].min())
    if not 0 < eps1 < eps <= mu:
        raise ParamError(f"need 0 < eps1 < eps <= {mu}")
    axes_a = list(range(n_a_axes))
    axes_b = list(range(n_a_axes, p_ab.n_axes))
    size_a = int(np.prod([p_ab.axes[a] for a in axes_a]))
    size_b = int(np.prod([p_ab.axes[b] for b in axes_b]))
    i_ab = mutual_information(p_ab, axes_a, axes_b)
    h_a = entropy(p_ab.marginal(axes_a))
    corr = 2.0 * size_a * size_b * math.exp(
        -2.0 * n * (1.0 - eps1) * (eps - eps1) ** 2 / (1.0 + eps1) * mu * mu
    )
    upper = min(1.0, 2.0 ** (-n * (i_ab - 2.0 * eps * h_a)))
    lower = min(upper, max(0.0, (1.0 - corr) * 2.0 ** (-n * (i_ab + 2.0 * eps * h_a))))
    return BoundBracket(lower=lower, upper=upper, correction=corr)


@dataclass(frozen=True)
class TypicalityContext:
    """Model-derived constants that the parameter orderings are checked against."""

    mu_wu_min: float
    mu_xy_min: float
    h_x: float
    h_w: float
    mu_axy_min: float | None = None


@dataclass(frozen=True)
class TypicalityParams:
    """The small-constant family driving every typicality test.

    Orderings that do not need model context are checked on construction;
    `validate_for` enforces the full family against a TypicalityContext:

        0 < delta1 < delta < min_k mu(W,U_k)
        0 < eps1 < eps < min_k mu(X,Y_k)
        eps < delta^2 * min_k mu(W,U_k) / (2 H(X) ln 2)
        0 < eps1 < eps_h1 < eps_h < mu(A_k,X,Y_k)     (source-side helpers)
        list_margin > 3 eps H(X) + 2 delta H(W)       (source-side helpers)
    """

    eps: float
    eps1: float
    delta: float
    delta1: float
    eps_h: float | None = None
    eps_h1: float | None = None
    list_margin: float | None = None

    def __post_init__(self):
        if not 0 < self.eps1 < self.eps:
            raise ParamError("need 0 < eps1 < eps")
        if not 0 < self.delta1 < self.delta:
            raise ParamError("need 0 < delta1 < delta")
        helper = (self.eps_h, self.eps_h1)
        if any(v is not None for v in helper) and not all(v is not None for v in helper):
            raise ParamError("eps_h and eps_h1 must be given together")
        if self.eps_h is not None and not self.eps1 < self.eps_h1 < self.eps_h:
            raise ParamError("need eps1 < eps_h1 < eps_h")

    def validate_for(self, ctx: TypicalityContext, mode2: bool = False) -> None:
        if not self.delta < ctx.mu_wu_min:
            raise ParamError(f"delta = {self.delta} must be < min mu(W,U) = {ctx.mu_wu_min}")
        if not self.eps < ctx.mu_xy_min:
            raise ParamError(f"eps = {self.eps} must be < min mu(X,Y) = {ctx.mu_xy_min}")
        if ctx.h_x > 0:
            cap = ctx.mu_wu_min / (2.0 * ctx.h_x * math.log(2.0)) * self.delta**2
            if not self.eps < cap:
                raise ParamError(f"eps = {self.eps} must be < {cap} (delta^2 cap)")
        if mode2:
            if self.eps_h is None or self.list_margin is None:
                raise ParamError("source-side helpers need eps_h, eps_h1 and list_margin")
            if ctx.mu_axy_min is None:
                raise ParamError("context lacks mu(A,X,Y)")
            if not self.eps_h < ctx.mu_axy_min:
                raise ParamError(
                    f"eps_h = {self.eps_h} must be < mu(A,X,Y) = {ctx.mu_axy_min}"
                )
            floor_margin = 3.0 * self.eps * ctx.h_x + 2.0 * self.delta * ctx.h_w
            if not self.list_margin > floor_margin:
                raise ParamError(
                    f"list_margin = {self.list_margin} must be > {floor_margin}"
                )

    @classmethod
    def defaults(cls, ctx: TypicalityContext, mode2: bool = False) -> "TypicalityParams":
        """Auto-picked constants sitting safely inside every constraint.

        The theory only requires these constants to be "arbitrarily small";
        any finite choice is an artifact decision.  The defaults take 90%
        of each binding cap and are user-overridable.
        """
        delta = 0.9 * ctx.mu_wu_min
        cap = ctx.mu_xy_min
        if ctx.h_x > 0:
            cap = min(cap, ctx.mu_wu_min / (2.0 * ctx.h_x * math.log(2.0)) * delta**2)
        eps = 0.9 * cap
        eps_h = eps_h1 = margin = None
        if mode2:
            if ctx.mu_axy_min is None:
                raise ParamError("context lacks mu(A,X,Y)")
            eps_h = 0.9 * ctx.mu_axy_min
            eps_h1 = 0.5 * (eps / 2.0 + eps_h)
            if not eps / 2.0 < eps_h1 < eps_h:
                raise ParamError("cannot fit eps_h1 between eps1 and eps_h")
            margin = 1.1 * (3.0 * eps * ctx.h_x + 2.0 * delta * ctx.h_w)
            if margin <= 0:
                margin = 1e-6
        return cls(eps=eps, eps1=eps / 2.0, delta=delta, delta1=delta / 2.0,
                   eps_h=eps_h, eps_h1=eps_h1, list_margin=margin)
