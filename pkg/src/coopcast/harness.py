"""Deterministic Monte Carlo experiment runner.

Every trial draws its randomness from counter-based streams keyed by
(master_seed, trial_index, role) with roles {source, codebook, channel,
helper, decoder-fallback}, so trials are order-independent and results are
byte-identical for any thread count.  Codebooks are generated once per
experiment from the codebook role (stream index 0); `resample_codebooks`
switches to per-trial regeneration (stream index = trial index).

The transmitter's fallback channel sequence (source not in the codebook)
is drawn from the channel role: it is transmitter-side randomness and the
role family has no separate encoder tag.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import codec, regions
from . import rng as rng_mod
from .exceptions import ModelError
from .info import JointPmf, entropy
from .model import (
    BandwidthConfig,
    Model,
    attach_auxiliary,
    channel_joint,
    min_support,
    push_quantizer,
    sample_iid,
    transmit,
)
from .optimize import OptOptions
from .typicality import MembershipTest, TypicalityContext, TypicalityParams

SCHEMES = ("list", "mode1", "mode2", "tuncel-unique")
WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class ExperimentConfig:
    model: Model
    scheme: str
    n_s: int
    trials: int
    master_seed: int
    rates: tuple[float, ...] | None = None
    exponents: tuple[float, ...] | None = None
    p_w: tuple[float, ...] | None = None
    aux: tuple | None = None
    params: TypicalityParams | None = None
    eps_codebook: float | None = None
    eps_h: float = 0.05
    resample_codebooks: bool = False
    validate_params: bool = True
    threads: int = 1
    opt: OptOptions = field(default_factory=OptOptions)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ModelError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1:
            raise ModelError("need at least one trial")


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    errors: tuple[bool, ...]
    list_miss: tuple[bool, ...]
    list_overflow: tuple[bool, ...]
    list_sizes: tuple[int, ...]


@dataclass(frozen=True)
class ReceiverStats:
    receiver: int
    trials: int
    errors: int
    rate: float
    ci_lo: float
    ci_hi: float
    list_miss: float
    list_overflow: float
    list_size_hist: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SimStats:
    scheme: str
    n_s: int
    n_c: int
    per_receiver: tuple[ReceiverStats, ...]


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """95% Wilson score interval; well behaved at zero counts."""
    ph = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (ph + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(ph * (1.0 - ph) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Preparation: resolve witnesses, parameters, exponents and reference joints.


@dataclass
class _Receiver:
    t_xy: MembershipTest
    t_wu: MembershipTest
    d: float
    size_cap: int
    rate: float = 0.0
    # codeword-side helpers
    quantizer: object = None
    p_wuv: JointPmf | None = None
    v_book: codec.Codebook | None = None
    v_bins: codec.BinAssignment | None = None
    v_lookup: codec.RowLookup | None = None
    # source-side helpers
    aux: np.ndarray | None = None
    p_av: JointPmf | None = None
    p_ay: JointPmf | None = None
    p_xya: JointPmf | None = None
    i_ay: float = 0.0
    a_book: codec.HelperCodebook | None = None


@dataclass
class _Prepared:
    cfg: ExperimentConfig
    bw: BandwidthConfig
    p_w: np.ndarray
    params: TypicalityParams
    eps_codebook: float
    c_x: codec.Codebook | None
    c_w: codec.Codebook | None
    lookup_x: codec.RowLookup | None
    receivers: list[_Receiver]


def _resolve_witness(cfg: ExperimentConfig) -> tuple[np.ndarray, tuple[np.ndarray, ...] | None]:
    m = cfg.model
    if cfg.p_w is not None:
        pw = np.asarray(cfg.p_w, dtype=np.float64)
        if pw.size != m.channel.n_inputs or abs(pw.sum() - 1.0) > 1e-9 or pw.min() < 0:
            raise ModelError("explicit input pmf is not a pmf over the channel input")
        return pw / pw.sum(), cfg.aux
    k = m.source.n_receivers
    if cfg.scheme == "mode1":
        v = regions.check_mode1(m.source, m.channel, m.kappa,
                                cfg.rates or (0.0,) * k, m.quantizers, cfg.opt)
        return v.witness_pw, None
    if cfg.scheme == "mode2":
        v = regions.check_mode2(m.source, m.channel, m.kappa,
                                cfg.rates or (0.0,) * k, cfg.opt)
        return v.witness_pw, cfg.aux if cfg.aux is not None else v.witness_aux
    if cfg.scheme == "list" and cfg.exponents is not None:
        v = regions.check_list_region(m.source, m.channel, m.kappa, cfg.exponents, cfg.opt)
        return v.witness_pw, None
    v = regions.check_tuncel(m.source, m.channel, m.kappa, cfg.opt)
    return v.witness_pw, None


def _reorder(p: JointPmf, order: tuple[int, ...]) -> JointPmf:
    return JointPmf(np.transpose(p.probs, order))


def prepare(cfg: ExperimentConfig) -> _Prepared:
    m = cfg.model
    src, ch = m.source, m.channel
    k_all = src.n_receivers
    bw = BandwidthConfig.for_source_length(m.kappa, cfg.n_s)
    kap = float(m.kappa)

    p_w, aux = _resolve_witness(cfg)
    p_w_j = JointPmf(p_w)

    if cfg.scheme == "mode2":
        if not src.has_helper_side:
            raise ModelError("source-side helper scheme needs V axes in the source")
        if cfg.rates is None:
            raise ModelError("source-side helper scheme needs rates")
        if aux is None:
            raise ModelError("no auxiliary channels resolved")
    if cfg.scheme == "mode1" and m.quantizers is None:
        raise ModelError("codeword-side helper scheme needs quantizers")

    # model-derived constants for the parameter checks
    wu_joints = [channel_joint(p_w_j, ch).marginal([0, 1 + k]) for k in range(k_all)]
    aux_joints = None
    mu_axy = None
    if cfg.scheme == "mode2":
        from .model import AuxiliaryChannel

        aux_mats = [np.asarray(a, dtype=np.float64) for a in aux]
        aux_joints = [attach_auxiliary(src, AuxiliaryChannel(a), k) for k, a in enumerate(aux_mats)]
        mu_axy = min(min_support(j.marginal([0, 1, 3])) for j in aux_joints)
    ctx = TypicalityContext(
        mu_wu_min=min(min_support(j) for j in wu_joints),
        mu_xy_min=min(min_support(src.pmf_xy(k)) for k in range(k_all)),
        h_x=src.h_x(),
        h_w=entropy(p_w_j),
        mu_axy_min=mu_axy,
    )
    params = cfg.params or TypicalityParams.defaults(ctx, mode2=cfg.scheme == "mode2")
    if cfg.validate_params:
        params.validate_for(ctx, mode2=cfg.scheme == "mode2")
    eps_cb = cfg.eps_codebook if cfg.eps_codebook is not None else params.eps

    receivers: list[_Receiver] = []
    ch_terms = regions._ChannelTerms(ch)
    for k in range(k_all):
        p_wu = wu_joints[k]
        t_xy = MembershipTest.build(src.pmf_xy(k), bw.n_s, params.eps)
        t_wu = MembershipTest.build(p_wu, bw.n_c, params.delta)
        h_margin = max(src.h_x_given_y(k) - kap * ch_terms.mi(p_w, k), 0.0)

        if cfg.scheme == "mode1":
            d, r = (None, None)
            if cfg.exponents is not None and cfg.rates is not None:
                d, r = float(cfg.exponents[k]), float(cfg.rates[k])
            else:
                d, r = codec.pick_exponent_mode1(src, ch, p_w, m.quantizers[k],
                                                 params.delta, k, cfg.eps_h, m.kappa)
            rec = _Receiver(t_xy=t_xy, t_wu=t_wu, d=d,
                            size_cap=int(math.floor(2.0 ** (bw.n_s * d))), rate=r)
            rec.quantizer = m.quantizers[k]
            rec.p_wuv = push_quantizer(p_wu, m.quantizers[k], w_axis=0)
        elif cfg.scheme == "mode2":
            d = h_margin + float(params.list_margin)
            rec = _Receiver(t_xy=t_xy, t_wu=t_wu, d=d,
                            size_cap=int(math.floor(2.0 ** (bw.n_s * d))),
                            rate=float(cfg.rates[k]))
            rec.aux = np.asarray(aux[k], dtype=np.float64)
            joint = aux_joints[k]  # (X, Y, V, A)
            rec.p_av = _reorder(joint.marginal([2, 3]), (1, 0))
            rec.p_ay = _reorder(joint.marginal([1, 3]), (1, 0))
            rec.p_xya = joint.marginal([0, 1, 3])
            p_ya = joint.marginal([1, 3])
            rec.i_ay = max(0.0, entropy(p_ya.marginal([0])) + entropy(p_ya.marginal([1]))
                           - entropy(p_ya))
        elif cfg.scheme == "list":
            d = float(cfg.exponents[k]) if cfg.exponents is not None else h_margin + 0.05
            rec = _Receiver(t_xy=t_xy, t_wu=t_wu, d=d,
                            size_cap=int(math.floor(2.0 ** (bw.n_s * d))))
        else:  # tuncel-unique
            rec = _Receiver(t_xy=t_xy, t_wu=t_wu, d=0.0, size_cap=1)
        receivers.append(rec)

    prep = _Prepared(cfg=cfg, bw=bw, p_w=p_w, params=params, eps_codebook=eps_cb,
                     c_x=None, c_w=None, lookup_x=None, receivers=receivers)
    if not cfg.resample_codebooks:
        _build_codebooks(prep, stream_index=0)
    return prep


def _build_codebooks(prep: _Prepared, stream_index: int) -> tuple:
    """Generate all codebooks for one codebook-stream index."""
    cfg = prep.cfg
    src = cfg.model.source
    c_x, c_w = codec.gen_codebooks(src.pmf_x(), JointPmf(prep.p_w), prep.bw.n_s,
                                   prep.eps_codebook, cfg.master_seed,
                                   n_channel=prep.bw.n_c,
                                   stream_index=stream_index)
    lookup_x = codec.RowLookup(c_x.entries, base=int(src.pmf_x().axes[0]))
    extras = []
    for k, rec in enumerate(prep.receivers):
        # disjoint stream-index namespaces: codebooks use the raw index,
        # helper randomness gets high bits so indices never collide
        helper_index = (1 << 40) | (stream_index << 8) | k
        if cfg.scheme == "mode1":
            v_book, v_bins = codec.mode1_helper_build(
                c_w, rec.quantizer, rec.rate, prep.bw.n_s, cfg.master_seed,
                stream_index=helper_index)
            v_lookup = codec.RowLookup(v_book.entries, base=rec.quantizer.n_outputs)
            extras.append((v_book, v_bins, v_lookup))
        elif cfg.scheme == "mode2":
            a_book = codec.mode2_helper_build(
                rec.p_av.marginal([0]), prep.bw.n_s, rec.rate, rec.i_ay,
                prep.params.eps_h1, cfg.master_seed,
                stream_index=(2 << 40) | (stream_index << 8) | k)
            extras.append(a_book)
        else:
            extras.append(None)
    if stream_index == 0 and not cfg.resample_codebooks:
        prep.c_x, prep.c_w, prep.lookup_x = c_x, c_w, lookup_x
        for rec, extra in zip(prep.receivers, extras):
            if cfg.scheme == "mode1":
                rec.v_book, rec.v_bins, rec.v_lookup = extra
            elif cfg.scheme == "mode2":
                rec.a_book = extra
    return c_x, c_w, lookup_x, extras


def _distinct_count(lookup_x: codec.RowLookup, indices: np.ndarray) -> int:
    if not indices.size:
        return 0
    return int(np.unique(lookup_x.ids[indices]).size)


def _run_one(prep: _Prepared, t: int) -> TrialResult:
    cfg = prep.cfg
    m = cfg.model
    src = m.source
    k_all = src.n_receivers

    if cfg.resample_codebooks:
        c_x, c_w, lookup_x, extras = _build_codebooks(prep, stream_index=t)
    else:
        c_x, c_w, lookup_x = prep.c_x, prep.c_w, prep.lookup_x
        extras = None

    src_gen = rng_mod.stream(cfg.master_seed, t, "source")
    ch_gen = rng_mod.stream(cfg.master_seed, t, "channel")
    helper_gen = rng_mod.stream(cfg.master_seed, t, "helper")
    dec_gen = rng_mod.stream(cfg.master_seed, t, "decoder-fallback")

    seqs = sample_iid(src.joint, prep.bw.n_s, src_gen)
    x = seqs[0]
    ys = [seqs[1 + k] for k in range(k_all)]
    vs = [seqs[1 + k_all + k] for k in range(k_all)] if src.has_helper_side else None

    m_idx, w = codec.encode(x, c_x, c_w, ch_gen, lookup_x)
    us = transmit(w, m.channel, ch_gen)

    x_first = lookup_x.first_index(x)
    x_id = lookup_x.ids[x_first] if x_first >= 0 else -1

    errors, miss_f, over_f, sizes = [], [], [], []
    for k in range(k_all):
        rec = prep.receivers[k]
        dlist = codec.list_decode_prepared(us[k], ys[k], c_x, c_w, rec.t_xy, rec.t_wu)
        size = _distinct_count(lookup_x, dlist.indices)
        miss = x_id < 0 or not bool(np.isin(x_id, lookup_x.ids[dlist.indices]).any())
        overflow = size > rec.size_cap
        if cfg.scheme == "list":
            err = miss or overflow
        elif cfg.scheme == "tuncel-unique":
            if size == 1:
                vid = lookup_x.ids[dlist.indices[0]]
                x_hat = c_x.entries[lookup_x.first_of_id[vid]]
            else:
                x_hat = c_x.entries[rng_mod.uniform_index(dec_gen, c_x.size)]
            err = bool(np.any(x_hat != x))
        elif cfg.scheme == "mode1":
            if cfg.resample_codebooks:
                v_book, v_bins, v_lookup = extras[k]
            else:
                v_book, v_bins, v_lookup = rec.v_book, rec.v_bins, rec.v_lookup
            v_true = rec.quantizer.map[w]
            b = codec.mode1_helper_encode(v_true, v_book, v_bins, helper_gen, v_lookup)
            x_hat = codec.mode1_receiver(dlist, b, v_bins, v_book, c_w, c_x, us[k],
                                         rec.p_wuv, prep.params.eps, dec_gen,
                                         v_lookup, lookup_x)
            err = bool(np.any(x_hat != x))
        else:  # mode2
            a_book = extras[k] if cfg.resample_codebooks else rec.a_book
            j = codec.mode2_helper_encode(vs[k], a_book, rec.p_av,
                                          prep.params.eps_h1, helper_gen)
            x_hat = codec.mode2_receiver(j, a_book, ys[k], dlist, c_x, rec.p_ay,
                                         rec.p_xya, prep.params.eps,
                                         prep.params.eps_h1, dec_gen, lookup_x)
            err = bool(np.any(x_hat != x))
        errors.append(bool(err))
        miss_f.append(bool(miss))
        over_f.append(bool(overflow))
        sizes.append(size)

    return TrialResult(trial_index=t, errors=tuple(errors), list_miss=tuple(miss_f),
                       list_overflow=tuple(over_f), list_sizes=tuple(sizes))


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialResult:
    """One full sample/encode/transmit/helper/decode pass."""
    return _run_one(prepare(cfg), trial_index)


def run_experiment(cfg: ExperimentConfig,
                   trial_log: list | None = None) -> SimStats:
    """Aggregate `cfg.trials` independent trials into per-receiver statistics."""
    prep = prepare(cfg)
    indices = range(cfg.trials)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda t: _run_one(prep, t), indices))
    else:
        results = [_run_one(prep, t) for t in indices]
    results.sort(key=lambda r: r.trial_index)
    if trial_log is not None:
        trial_log.extend(results)

    k_all = cfg.model.source.n_receivers
    per = []
    for k in range(k_all):
        errs = sum(r.errors[k] for r in results)
        miss = sum(r.list_miss[k] for r in results)
        over = sum(r.list_overflow[k] for r in results)
        hist: dict[int, int] = {}
        for r in results:
            hist[r.list_sizes[k]] = hist.get(r.list_sizes[k], 0) + 1
        lo, hi = wilson_interval(errs, cfg.trials)
        per.append(ReceiverStats(
            receiver=k + 1, trials=cfg.trials, errors=errs, rate=errs / cfg.trials,
            ci_lo=lo, ci_hi=hi, list_miss=miss / cfg.trials,
            list_overflow=over / cfg.trials,
            list_size_hist=tuple(sorted(hist.items())),
        ))
    return SimStats(scheme=cfg.scheme, n_s=prep.bw.n_s, n_c=prep.bw.n_c,
                    per_receiver=tuple(per))


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence) -> list[tuple[object, SimStats]]:
    """One experiment per value; run i uses master seed (cfg.master_seed XOR i)."""
    if not values:
        raise ModelError("sweep needs at least one value")
    out = []
    for i, val in enumerate(values):
        sub = replace(cfg, master_seed=cfg.master_seed ^ i)
        if axis == "n_s":
            sub = replace(sub, n_s=int(val))
        elif axis == "R":
            sub = replace(sub, rates=tuple(float(val) for _ in range(cfg.model.source.n_receivers)))
        elif axis == "D":
            sub = replace(sub, exponents=tuple(float(val) for _ in range(cfg.model.source.n_receivers)))
        elif axis == "kappa":
            new_model = replace(cfg.model, kappa=Fraction(val))
            sub = replace(sub, model=new_model)
        else:
            raise ModelError(f"unknown sweep axis {axis!r}")
        out.append((val, run_experiment(sub)))
    return out


# ---------------------------------------------------------------------------
# Persistence


CSV_HEADER = "n_s,n_c,scheme,receiver,trials,errors,rate,ci_lo,ci_hi,list_miss,list_overflow"


def stats_csv_rows(stats: SimStats, extra: dict | None = None) -> list[str]:
    rows = []
    suffix = "".join(f",{v}" for v in (extra or {}).values())
    for r in stats.per_receiver:
        rows.append(
            f"{stats.n_s},{stats.n_c},{stats.scheme},{r.receiver},{r.trials},"
            f"{r.errors},{r.rate!r},{r.ci_lo!r},{r.ci_hi!r},"
            f"{r.list_miss!r},{r.list_overflow!r}{suffix}"
        )
    return rows


def stats_to_dict(stats: SimStats) -> dict:
    return {
        "scheme": stats.scheme,
        "n_s": stats.n_s,
        "n_c": stats.n_c,
        "receivers": [
            {
                "receiver": r.receiver,
                "trials": r.trials,
                "errors": r.errors,
                "rate": r.rate,
                "ci_lo": r.ci_lo,
                "ci_hi": r.ci_hi,
                "list_miss": r.list_miss,
                "list_overflow": r.list_overflow,
                "list_size_hist": [[s, c] for s, c in r.list_size_hist],
            }
            for r in stats.per_receiver
        ],
    }


def trial_log_lines(results: Sequence[TrialResult]) -> list[str]:
    lines = []
    for r in sorted(results, key=lambda x: x.trial_index):
        lines.append(json.dumps({
            "trial": r.trial_index,
            "receivers": [
                {"error": e, "miss": m, "overflow": o, "list_size": s}
                for e, m, o, s in zip(r.errors, r.list_miss, r.list_overflow, r.list_sizes)
            ],
        }, sort_keys=True))
    return lines
