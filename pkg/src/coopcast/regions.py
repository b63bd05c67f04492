"""Single-letter feasibility tests and capacity expressions.

Every check answers an "exists an input pmf P_W such that ..." question by
deterministic concave maximization of the worst-case receiver margin.
Feasibility uses strict inequalities with a 1e-9 slack tolerance; verdicts
sitting on the boundary are reported infeasible with `boundary=True`, since
the closure of the region is attained only in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exceptions import ModelError
from .info import Bits, binary_convolution, binary_entropy
from .model import BroadcastChannel, Quantizer, SourceModel
from .optimize import OptOptions, maximize_simplex, project_simplex

FEAS_TOL = 1e-9


def _h(arr: np.ndarray) -> float:
    flat = np.asarray(arr, dtype=np.float64).reshape(-1)
    pos = flat[flat > 0]
    return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0


@dataclass(frozen=True)
class RegionVerdict:
    """Answer to a feasibility query.

    slack[k] is (left side minus right side) of receiver k's binding
    inequality at the witness; negative means satisfied.  `boundary` marks
    verdicts within tolerance of equality.
    """

    feasible: bool
    witness_pw: np.ndarray
    slack: np.ndarray
    objective: float
    boundary: bool = False
    witness_aux: tuple[np.ndarray, ...] | None = None

    def to_dict(self) -> dict:
        d = {
            "feasible": self.feasible,
            "boundary": self.boundary,
            "objective": self.objective,
            "witness_pw": self.witness_pw.tolist(),
            "slack": self.slack.tolist(),
        }
        if self.witness_aux is not None:
            d["witness_aux"] = [a.tolist() for a in self.witness_aux]
        return d


@dataclass(frozen=True)
class TradeoffCurve:
    """Monotone (rate, value) trade-off: value is nonincreasing in rate."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(r), float(v)) for r, v in self.points)
        for (r0, v0), (r1, v1) in zip(pts, pts[1:]):
            if r1 < r0 - 1e-12 or v1 > v0 + 1e-9:
                raise ModelError("trade-off points must be sorted with nonincreasing value")
        object.__setattr__(self, "points", pts)

    def csv_rows(self) -> list[str]:
        return ["rate,value"] + [f"{r!r},{v!r}" for r, v in self.points]


class _ChannelTerms:
    """Per-receiver fast evaluators for the information terms in P_W."""

    def __init__(self, ch: BroadcastChannel, quantizers: Sequence[Quantizer] | None = None):
        self.nw = ch.n_inputs
        self.k = ch.n_receivers
        self.t = [ch.single_receiver(k) for k in range(self.k)]
        self.hrows = [np.array([_h(row) for row in tk]) for tk in self.t]
        self.vmasks = None
        if quantizers is not None:
            self.vmasks = []
            for q in quantizers:
                if q.map.size != self.nw:
                    raise ModelError("quantizer domain must match |W|")
                m = np.zeros((q.n_outputs, self.nw))
                m[q.map, np.arange(self.nw)] = 1.0
                self.vmasks.append(m)

    def mi(self, p: np.ndarray, k: int) -> float:
        """I(W; U_k) at input pmf p."""
        pu = p @ self.t[k]
        return max(0.0, _h(pu) - float(p @ self.hrows[k]))

    def mi_v_given_u(self, p: np.ndarray, k: int) -> float:
        """I(W; V_k | U_k) with V_k = quantizer_k(W); equals H(V_k | U_k)."""
        puv = self.vmasks[k] * p[None, :] @ self.t[k]
        pu = p @ self.t[k]
        return max(0.0, _h(puv) - _h(pu))

    def min_support_wu(self, p: np.ndarray) -> float:
        vals = []
        for k in range(self.k):
            joint = p[:, None] * self.t[k]
            pos = joint[joint > 0]
            vals.append(float(pos.min()))
        return min(vals)


def _finish(terms_at, dim_w, opts) -> RegionVerdict:
    """Maximize min_k term_k over P_W and fold into a verdict."""
    opts = opts or OptOptions()

    def f(p):
        return min(terms_at(p))

    pw, value = maximize_simplex(f, dim_w, opts)
    slack = -np.asarray(terms_at(pw))
    max_slack = float(slack.max())
    feasible = max_slack < -FEAS_TOL
    boundary = not feasible and max_slack <= FEAS_TOL
    return RegionVerdict(
        feasible=feasible,
        witness_pw=pw,
        slack=slack,
        objective=value,
        boundary=boundary,
    )


def check_tuncel(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                 opts: OptOptions | None = None) -> RegionVerdict:
    """No-cooperation feasibility: H(X|Y_k) < kappa I(W;U_k) for all k."""
    terms = _ChannelTerms(ch)
    kap = float(kappa)
    h_xy = [src.h_x_given_y(k) for k in range(src.n_receivers)]

    def terms_at(p):
        return [kap * terms.mi(p, k) - h_xy[k] for k in range(src.n_receivers)]

    return _finish(terms_at, ch.n_inputs, opts)


def check_mode1(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                rates: Sequence[float], quantizers: Sequence[Quantizer],
                opts: OptOptions | None = None) -> RegionVerdict:
    """Codeword-side helpers: H(X|Y_k) < kappa I(W;U_k) + min{R_k, kappa I(W;V_k|U_k)}."""
    if len(rates) != src.n_receivers or len(quantizers) != src.n_receivers:
        raise ModelError("need one rate and one quantizer per receiver")
    terms = _ChannelTerms(ch, quantizers)
    kap = float(kappa)
    h_xy = [src.h_x_given_y(k) for k in range(src.n_receivers)]

    def terms_at(p):
        return [
            kap * terms.mi(p, k)
            + min(float(rates[k]), kap * terms.mi_v_given_u(p, k))
            - h_xy[k]
            for k in range(src.n_receivers)
        ]

    return _finish(terms_at, ch.n_inputs, opts)


# ---------------------------------------------------------------------------
# Source-side helpers (quantize-and-bin descriptions)


def _aux_information(p_xyv: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """(I(V;A|Y), H(X|A,Y)) for description channel q applied to V."""
    joint = p_xyv[..., None] * q[None, None, :, :]  # (x, y, v, a)
    p_ya = joint.sum(axis=(0, 2))
    p_yva = joint.sum(axis=0)
    p_xya = joint.sum(axis=2)
    p_yv = p_xyv.sum(axis=0)
    i_va_y = max(0.0, _h(p_yv) + _h(p_ya) - _h(p_yva) - _h(p_xyv.sum(axis=(0, 2))))
    h_x_ay = max(0.0, _h(p_xya) - _h(p_ya))
    return i_va_y, h_x_ay


def _repair_to_rate(p_xyv: np.ndarray, q: np.ndarray, r: float) -> np.ndarray:
    """Pull q back toward the uninformative channel until I(V;A|Y) <= r."""
    if _aux_information(p_xyv, q)[0] <= r + 1e-12:
        return q
    base = np.full_like(q, 1.0 / q.shape[1])
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _aux_information(p_xyv, base + mid * (q - base))[0] <= r:
            lo = mid
        else:
            hi = mid
    return base + lo * (q - base)


def _symmetric_family(nv: int, alpha: float) -> np.ndarray:
    q = np.full((nv, nv), alpha / (nv - 1))
    np.fill_diagonal(q, 1.0 - alpha)
    return q


def _helper_tradeoff_full(src: SourceModel, k: int, r_k: float,
                          opts: OptOptions | None = None) -> tuple[Bits, np.ndarray]:
    """Minimize H(X|A_k,Y_k) over descriptions A_k of V_k with I(V_k;A_k|Y_k) <= R_k.

    The description alphabet is fixed to |A_k| = |V_k|.  Candidates come
    from the symmetric-noise family bisected onto the rate boundary plus
    repaired hill-climbing restarts; rate-infeasible candidates are pulled
    back to the boundary before scoring.
    """
    if r_k < 0:
        raise ModelError("helper rate must be nonnegative")
    opts = opts or OptOptions()
    p_xyv = src.pmf_xyv(k).probs
    nv = p_xyv.shape[2]
    p_xy = p_xyv.sum(axis=2)
    h_x_y = _h(p_xy) - _h(p_xy.sum(axis=0))

    base = np.full((nv, nv), 1.0 / nv)
    if r_k <= FEAS_TOL:
        return max(0.0, h_x_y), base

    ident = np.eye(nv)
    i_full, h_full = _aux_information(p_xyv, ident)
    if i_full <= r_k + 1e-12:
        return h_full, ident

    candidates: list[np.ndarray] = []

    # symmetric-noise sweep: alpha with I exactly on the rate boundary
    lo, hi = 0.0, (nv - 1.0) / nv
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _aux_information(p_xyv, _symmetric_family(nv, mid))[0] > r_k:
            lo = mid
        else:
            hi = mid
    candidates.append(_symmetric_family(nv, hi))
    for alpha in np.linspace(0.0, (nv - 1.0) / nv, 17):
        candidates.append(_repair_to_rate(p_xyv, _symmetric_family(nv, float(alpha)), r_k))

    # repaired hill-climb from a few deterministic starts
    from . import rng as rng_mod

    gen = rng_mod.stream(opts.seed, 0, "optimizer")
    starts = [ident, candidates[0]]
    for _ in range(3):
        raw = gen.random((nv, nv))
        starts.append(np.vstack([project_simplex(row) for row in raw]))
    for start in starts:
        q = _repair_to_rate(p_xyv, start, r_k)
        best = _aux_information(p_xyv, q)[1]
        h = 0.25
        while h > 1e-5:
            improved = True
            while improved:
                improved = False
                for rrow in range(nv):
                    for i in range(nv):
                        for j in range(nv):
                            if i == j or q[rrow, j] < h - 1e-15:
                                continue
                            cand = q.copy()
                            cand[rrow, i] += h
                            cand[rrow, j] -= h
                            cand = _repair_to_rate(p_xyv, cand, r_k)
                            val = _aux_information(p_xyv, cand)[1]
                            if val < best - 1e-12:
                                q, best = cand, val
                                improved = True
            h *= 0.5
        candidates.append(q)

    best_q, best_h = None, np.inf
    for q in candidates:
        i_va, h_xa = _aux_information(p_xyv, q)
        if i_va > r_k + 1e-9:
            continue
        if h_xa < best_h - 1e-15:
            best_q, best_h = q, h_xa
    return best_h, best_q


def helper_tradeoff(src: SourceModel, k: int, r_k: float,
                    opts: OptOptions | None = None) -> Bits:
    """Best attainable H(X|A_k,Y_k) at helper rate R_k (see _helper_tradeoff_full)."""
    return _helper_tradeoff_full(src, k, r_k, opts)[0]


def check_mode2(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                rates: Sequence[float], opts: OptOptions | None = None) -> RegionVerdict:
    """Source-side helpers: exists A_k with R_k > I(V_k;A_k|Y_k) and
    H(X|A_k,Y_k) < kappa I(W;U_k)."""
    if len(rates) != src.n_receivers:
        raise ModelError("need one rate per receiver")
    gammas, auxes = [], []
    for k in range(src.n_receivers):
        g, q = _helper_tradeoff_full(src, k, float(rates[k]), opts)
        gammas.append(g)
        auxes.append(q)
    terms = _ChannelTerms(ch)
    kap = float(kappa)

    def terms_at(p):
        return [kap * terms.mi(p, k) - gammas[k] for k in range(src.n_receivers)]

    v = _finish(terms_at, ch.n_inputs, opts)
    return RegionVerdict(
        feasible=v.feasible, witness_pw=v.witness_pw, slack=v.slack,
        objective=v.objective, boundary=v.boundary, witness_aux=tuple(auxes),
    )


def check_mixed(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                rates: Sequence[float], quantizers: Sequence[Quantizer] | None,
                k1: Sequence[int], k2: Sequence[int],
                opts: OptOptions | None = None) -> RegionVerdict:
    """Codeword-side helpers on k1, source-side helpers on k2."""
    k1, k2 = list(k1), list(k2)
    if sorted(k1 + k2) != list(range(src.n_receivers)):
        raise ModelError("k1 and k2 must partition the receivers")
    kap = float(kappa)
    h_xy = {k: src.h_x_given_y(k) for k in k1}
    quant_map = {}
    if k1:
        if quantizers is None:
            raise ModelError("codeword-side receivers need quantizers")
        terms_q = _ChannelTerms(ch, quantizers)
        quant_map = {k: terms_q for k in k1}
    terms = _ChannelTerms(ch)
    gammas, auxes = {}, {}
    for k in k2:
        gammas[k], auxes[k] = _helper_tradeoff_full(src, k, float(rates[k]), opts)

    def terms_at(p):
        out = []
        for k in range(src.n_receivers):
            if k in gammas:
                out.append(kap * terms.mi(p, k) - gammas[k])
            else:
                out.append(
                    kap * terms.mi(p, k)
                    + min(float(rates[k]), kap * quant_map[k].mi_v_given_u(p, k))
                    - h_xy[k]
                )
        return out

    v = _finish(terms_at, ch.n_inputs, opts)
    aux_tuple = tuple(auxes[k] for k in sorted(auxes)) if auxes else None
    return RegionVerdict(
        feasible=v.feasible, witness_pw=v.witness_pw, slack=v.slack,
        objective=v.objective, boundary=v.boundary, witness_aux=aux_tuple,
    )


def check_list_region(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                      exponents: Sequence[float],
                      opts: OptOptions | None = None) -> RegionVerdict:
    """List decoding: D_k > max{H(X|Y_k) - kappa I(W;U_k), 0} for all k."""
    if len(exponents) != src.n_receivers:
        raise ModelError("need one list exponent per receiver")
    if any(d < 0 for d in exponents):
        raise ModelError("list exponents are nonnegative")
    terms = _ChannelTerms(ch)
    kap = float(kappa)
    h_xy = [src.h_x_given_y(k) for k in range(src.n_receivers)]

    def terms_at(p):
        return [
            float(exponents[k]) - max(h_xy[k] - kap * terms.mi(p, k), 0.0)
            for k in range(src.n_receivers)
        ]

    return _finish(terms_at, ch.n_inputs, opts)


def check_list_unique(src: SourceModel, ch: BroadcastChannel, kappa: Fraction,
                      exponents: Sequence[float], k_list: Sequence[int],
                      opts: OptOptions | None = None) -> RegionVerdict:
    """List decoding on k_list, unique decoding on the complement."""
    k_list = sorted(set(k_list))
    if any(not 0 <= k < src.n_receivers for k in k_list):
        raise ModelError("list receiver index out of range")
    terms = _ChannelTerms(ch)
    kap = float(kappa)
    h_xy = [src.h_x_given_y(k) for k in range(src.n_receivers)]
    listset = set(k_list)
    exps = {k: float(exponents[i]) for i, k in enumerate(k_list)} if len(exponents) == len(k_list) \
        else {k: float(exponents[k]) for k in k_list}

    def terms_at(p):
        out = []
        for k in range(src.n_receivers):
            i_k = kap * terms.mi(p, k)
            if k in listset:
                out.append(exps[k] - max(h_xy[k] - i_k, 0.0))
            else:
                out.append(i_k - h_xy[k])
        return out

    return _finish(terms_at, ch.n_inputs, opts)


def helper_capacity(ch: BroadcastChannel, rates: Sequence[float],
                    quantizers: Sequence[Quantizer],
                    opts: OptOptions | None = None) -> tuple[Bits, np.ndarray]:
    """max_PW min_k [I(W;U_k) + min{R_k, I(W;V_k|U_k)}] (bandwidth-matched)."""
    if len(rates) != ch.n_receivers or len(quantizers) != ch.n_receivers:
        raise ModelError("need one rate and one quantizer per receiver")
    terms = _ChannelTerms(ch, quantizers)
    opts = opts or OptOptions()

    def f(p):
        return min(
            terms.mi(p, k) + min(float(rates[k]), terms.mi_v_given_u(p, k))
            for k in range(ch.n_receivers)
        )

    pw, value = maximize_simplex(f, ch.n_inputs, opts)
    return value, pw


def bidirectional_region(ch: BroadcastChannel, r1: float, r2: float,
                         q1: Quantizer, q2: Quantizer, n_points: int = 17,
                         opts: OptOptions | None = None) -> TradeoffCurve:
    """Upper boundary of the two-receiver exchange-rate region.

    Sweeps the weighted sum of the two corner bounds
    b1 = I(W;U_2) + min{R_2, I(W;V_2|U_2)} and
    b2 = I(W;U_1) + min{R_1, I(W;V_1|U_1)} over input pmfs.
    """
    if ch.n_receivers != 2:
        raise ModelError("bidirectional region needs exactly two receivers")
    terms = _ChannelTerms(ch, [q1, q2])
    opts = opts or OptOptions()

    def bounds(p):
        b1 = terms.mi(p, 1) + min(float(r2), terms.mi_v_given_u(p, 1))
        b2 = terms.mi(p, 0) + min(float(r1), terms.mi_v_given_u(p, 0))
        return b1, b2

    raw = []
    for lam in np.linspace(0.0, 1.0, n_points):
        def f(p, lam=lam):
            b1, b2 = bounds(p)
            return lam * b1 + (1.0 - lam) * b2

        pw, _ = maximize_simplex(f, ch.n_inputs, opts)
        raw.append(bounds(pw))

    raw.sort(key=lambda t: (t[0], -t[1]))
    pts: list[tuple[float, float]] = []
    for b1, b2 in raw:
        while pts and pts[-1][1] <= b2 + 1e-12:
            pts.pop()
        if not pts or b1 > pts[-1][0] - 1e-12:
            pts.append((b1, b2))
    return TradeoffCurve(tuple(pts))


def binary_example_curve(rho: float, alpha_grid: Sequence[float]) -> TradeoffCurve:
    """Closed-form (rate, conditional-entropy) pairs for the binary helper
    model: V = X xor Bern(rho), no receiver side information.

    Each alpha in [0, 1/2] yields the point (1 - h(alpha), h(alpha * rho)).
    This is the independent oracle for `helper_tradeoff` on that model.
    """
    if not 0.0 <= rho <= 0.5:
        raise ModelError("rho must lie in [0, 1/2]")
    pts = []
    for a in alpha_grid:
        if not 0.0 <= a <= 0.5:
            raise ModelError("alpha values must lie in [0, 1/2]")
        pts.append((1.0 - binary_entropy(a), binary_entropy(binary_convolution(a, rho))))
    pts.sort(key=lambda t: t[0])
    return TradeoffCurve(tuple(pts))
