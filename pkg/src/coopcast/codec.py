"""Executable random-coding schemes: list codes, codeword-side helpers
(hash-and-forward binning) and source-side helpers (quantize-and-bin).

Codebooks are regenerated bit-identically from (seed, parameters).  All
"smallest index" tie-breaks are implemented literally; all "unique ...
otherwise randomize" decoding rules fall back to fresh random draws, never
to an argmax.  Uniqueness of decoded codewords is counted over distinct
symbol sequences (lists are sets of sequences, and random codebooks may
hold duplicates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from . import rng as rng_mod
from .exceptions import CodebookSizeError, ExponentWindowError, ModelError
from .info import JointPmf, entropy
from .model import BroadcastChannel, Quantizer, SourceModel, transmit  # noqa: F401 (transmit is part of the codec surface)
from .typicality import MembershipTest, merge_symbols

MAX_CODEBOOK = 1 << 26


@dataclass(frozen=True)
class Codebook:
    """M iid codewords plus the recipe (seed, generating pmf) to rebuild them."""

    entries: np.ndarray
    seed: int
    gen_pmf: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def length(self) -> int:
        return self.entries.shape[1]

    def debug_dump(self) -> dict:
        return {
            "seed": self.seed,
            "size": self.size,
            "length": self.length,
            "gen_pmf": self.gen_pmf.tolist(),
            "head": self.entries[:16].tolist(),
        }


@dataclass(frozen=True)
class BinAssignment:
    """Random bin label per codeword index, reproducible from its seed."""

    bins: np.ndarray
    n_bins: int
    seed: int


@dataclass(frozen=True)
class HelperCodebook:
    """Description codebook indexed by (bin j, within-bin j')."""

    entries: np.ndarray  # (n_bins, per_bin, n)
    seed: int
    gen_pmf: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.entries.shape[0]

    @property
    def per_bin(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class DecodedList:
    """Codebook indices passing both list-membership tests, ascending."""

    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.size)


class RowLookup:
    """First-occurrence lookup over codebook rows (duplicate-aware)."""

    def __init__(self, rows: np.ndarray, base: int):
        self.rows = rows
        n = rows.shape[1]
        bits = max(1, int(base - 1).bit_length())
        if n * bits <= 62:
            keys = np.zeros(rows.shape[0], dtype=np.int64)
            for i in range(n):
                keys = (keys << bits) | rows[:, i]
            self._keys = keys
            self._bits = bits
        else:
            _, inverse = np.unique(rows, axis=0, return_inverse=True)
            self._keys = inverse.astype(np.int64)
            self._bits = None
        self._order = np.argsort(self._keys, kind="stable")
        self._sorted = self._keys[self._order]
        uniq, inv = np.unique(self._keys, return_inverse=True)
        self.ids = inv
        first = np.full(uniq.size, rows.shape[0], dtype=np.int64)
        np.minimum.at(first, inv, np.arange(rows.shape[0]))
        self.first_of_id = first

    def first_index(self, seq: np.ndarray) -> int:
        if self._bits is None:
            return _kernels.first_equal_row(self.rows, np.asarray(seq, dtype=np.int64))
        key = 0
        for s in np.asarray(seq, dtype=np.int64):
            key = (key << self._bits) | int(s)
        i = int(np.searchsorted(self._sorted, key))
        if i < self._sorted.size and self._sorted[i] == key:
            return int(self._order[i])
        return -1


def codebook_size(h_x: float, n: int, eps: float) -> int:
    m = int(math.floor(2.0 ** (n * h_x * (1.0 + eps))))
    if m < 1:
        m = 1
    if m > MAX_CODEBOOK:
        raise CodebookSizeError(
            f"codebook would need {m} codewords (guard: {MAX_CODEBOOK})"
        )
    return m


def gen_codebooks(p_x: JointPmf, p_w: JointPmf, n: int, eps: float, seed: int,
                  n_channel: int | None = None, stream_index: int = 0) -> tuple[Codebook, Codebook]:
    """Source and channel codebooks of common size 2^{n H(X)(1+eps)}.

    Source codewords have length n; channel codewords length n_channel
    (defaults to n for the bandwidth-matched case).  Entries are drawn iid
    from the single-letter pmfs out of one dedicated codebook stream.
    """
    if n < 1:
        raise ModelError("blocklength must be positive")
    n_channel = n if n_channel is None else n_channel
    m = codebook_size(entropy(p_x), n, eps)
    gen = rng_mod.stream(seed, stream_index, "codebook")
    cx = rng_mod.sample_flat(gen, p_x.flat(), m * n).reshape(m, n)
    cw = rng_mod.sample_flat(gen, p_w.flat(), m * n_channel).reshape(m, n_channel)
    return (
        Codebook(entries=cx, seed=seed, gen_pmf=p_x.flat().copy()),
        Codebook(entries=cw, seed=seed, gen_pmf=p_w.flat().copy()),
    )


def encode(x_seq: np.ndarray, c_x: Codebook, c_w: Codebook,
           gen: np.random.Generator, lookup: RowLookup | None = None) -> tuple[int | None, np.ndarray]:
    """Smallest codebook index matching the source, with its channel codeword.

    On a miss the transmitter sends a fresh iid channel sequence instead.
    """
    x_seq = np.asarray(x_seq, dtype=np.int64)
    if lookup is not None:
        m = lookup.first_index(x_seq)
    else:
        m = _kernels.first_equal_row(c_x.entries, x_seq)
    if m >= 0:
        return m, c_w.entries[m]
    w = rng_mod.sample_flat(gen, c_w.gen_pmf, c_w.length)
    return None, w


def list_decode(u_seq: np.ndarray, y_seq: np.ndarray, c_x: Codebook, c_w: Codebook,
                p_xy: JointPmf, p_wu: JointPmf, eps: float, delta: float) -> DecodedList:
    """Indices m with (X(m), y) eps-typical and (W(m), u) delta-typical."""
    t_xy = MembershipTest.build(p_xy, c_x.length, eps)
    t_wu = MembershipTest.build(p_wu, c_w.length, delta)
    return list_decode_prepared(u_seq, y_seq, c_x, c_w, t_xy, t_wu)


def list_decode_prepared(u_seq, y_seq, c_x: Codebook, c_w: Codebook,
                         t_xy: MembershipTest, t_wu: MembershipTest) -> DecodedList:
    mask = t_xy.mask(c_x.entries, np.asarray(y_seq, dtype=np.int64))
    idx = np.nonzero(mask)[0]
    if idx.size:
        mask2 = t_wu.mask(c_w.entries[idx], np.asarray(u_seq, dtype=np.int64))
        idx = idx[mask2]
    return DecodedList(indices=idx.astype(np.int64))


# ---------------------------------------------------------------------------
# Codeword-side helper (hash-and-forward)


def mode1_helper_build(c_w: Codebook, quantizer: Quantizer, r_k: float, n: int,
                       seed: int, stream_index: int = 1) -> tuple[Codebook, BinAssignment]:
    """Quantized codeword book V(m) = phi(W(m)) and its random binning.

    ceil(2^{n R_k}) bins; every codeword index gets an independent uniform
    bin label.
    """
    if r_k <= 0:
        raise ModelError("codeword-side helpers need a positive rate")
    exponent = n * r_k
    if exponent > 62:
        raise CodebookSizeError(f"2^{exponent} bins exceed the index range")
    n_bins = int(math.ceil(2.0**exponent))
    c_v = Codebook(entries=quantizer.map[c_w.entries], seed=c_w.seed,
                   gen_pmf=_quantizer_pushforward(c_w.gen_pmf, quantizer))
    gen = rng_mod.stream(seed, stream_index, "codebook")
    labels = np.minimum((gen.random(c_w.size) * n_bins).astype(np.int64), n_bins - 1)
    return c_v, BinAssignment(bins=labels, n_bins=n_bins, seed=seed)


def _quantizer_pushforward(p_w_flat: np.ndarray, quantizer: Quantizer) -> np.ndarray:
    out = np.zeros(quantizer.n_outputs)
    np.add.at(out, quantizer.map, p_w_flat)
    return out


def bin_of_value(v_seq: np.ndarray, c_v: Codebook, bins: BinAssignment,
                 lookup: RowLookup | None = None) -> int:
    """Bin of a codeword value: the bin of its first occurrence, -1 if absent."""
    if lookup is not None:
        m = lookup.first_index(np.asarray(v_seq, dtype=np.int64))
    else:
        m = _kernels.first_equal_row(c_v.entries, np.asarray(v_seq, dtype=np.int64))
    return int(bins.bins[m]) if m >= 0 else -1


def mode1_helper_encode(v_seq: np.ndarray, c_v: Codebook, bins: BinAssignment,
                        gen: np.random.Generator,
                        lookup: RowLookup | None = None) -> int:
    """Bin index of the observed quantized codeword; uniform bin on a miss."""
    b = bin_of_value(v_seq, c_v, bins, lookup)
    if b >= 0:
        return b
    return rng_mod.uniform_index(gen, bins.n_bins)


def mode1_receiver(dlist: DecodedList, b: int, bins: BinAssignment, c_v: Codebook,
                   c_w: Codebook, c_x: Codebook, u_seq: np.ndarray,
                   p_wuv: JointPmf, eps: float, gen: np.random.Generator,
                   lookup_v: RowLookup | None = None,
                   lookup_x: RowLookup | None = None) -> np.ndarray:
    """Resolve the helper bin against the decoded list, then decode the source.

    Stage 1: the V-codewords reachable from the list are intersected with
    bin b; a unique survivor becomes the helper estimate, otherwise the
    estimate is drawn iid from the V marginal.  Stage 2: a unique list
    codeword whose (W, u, V-estimate) triple is eps-typical is released;
    otherwise a uniformly random source codeword is.
    """
    lookup_v = lookup_v or RowLookup(c_v.entries, base=int(c_v.gen_pmf.size))
    ids = lookup_v.ids[dlist.indices] if dlist.size else np.empty(0, dtype=np.int64)
    cand = [vid for vid in np.unique(ids) if bins.bins[lookup_v.first_of_id[vid]] == b]
    if len(cand) == 1:
        v_hat = c_v.entries[lookup_v.first_of_id[cand[0]]]
    else:
        v_hat = rng_mod.sample_flat(gen, c_v.gen_pmf, c_v.length)

    x_hat = _unique_final(
        dlist, c_w.entries, c_x, p_wuv,
        given=merge_symbols((np.asarray(u_seq), v_hat),
                            (int(p_wuv.axes[1]), int(p_wuv.axes[2]))),
        eps=eps, lookup_x=lookup_x,
    )
    if x_hat is not None:
        return x_hat
    return c_x.entries[rng_mod.uniform_index(gen, c_x.size)]


def _unique_final(dlist: DecodedList, rows_all: np.ndarray, c_x: Codebook,
                  p_ref: JointPmf, given: np.ndarray, eps: float,
                  lookup_x: RowLookup | None) -> np.ndarray | None:
    """Unique distinct source sequence in the list passing a typicality test."""
    if not dlist.size:
        return None
    test = MembershipTest.build(p_ref, rows_all.shape[1], eps, n_row_axes=1)
    mask = test.mask(rows_all[dlist.indices], given)
    passing = dlist.indices[mask]
    if not passing.size:
        return None
    if lookup_x is not None:
        distinct = np.unique(lookup_x.ids[passing])
        if distinct.size == 1:
            return c_x.entries[lookup_x.first_of_id[distinct[0]]]
        return None
    rows = np.unique(c_x.entries[passing], axis=0)
    return rows[0] if rows.shape[0] == 1 else None


# ---------------------------------------------------------------------------
# Source-side helper (quantize-and-bin)


def mode2_helper_build(p_a: JointPmf, n: int, r_k: float, i_ay: float,
                       eps_h1: float, seed: int, stream_index: int = 2) -> HelperCodebook:
    """Description codebook with floor(2^{n R_k}) bins of
    floor(2^{n (I(A;Y) - eps_h1)}) entries each (at least one)."""
    if n * r_k > 62 or n * max(i_ay - eps_h1, 0.0) > 62:
        raise CodebookSizeError("helper codebook index range overflow")
    n_bins = max(1, int(math.floor(2.0 ** (n * r_k))))
    per_bin = max(1, int(math.floor(2.0 ** (n * (i_ay - eps_h1)))))
    if n_bins * per_bin > MAX_CODEBOOK:
        raise CodebookSizeError(
            f"helper codebook would need {n_bins * per_bin} codewords (guard: {MAX_CODEBOOK})"
        )
    gen = rng_mod.stream(seed, stream_index, "codebook")
    entries = rng_mod.sample_flat(gen, p_a.flat(), n_bins * per_bin * n).reshape(n_bins, per_bin, n)
    return HelperCodebook(entries=entries, seed=seed, gen_pmf=p_a.flat().copy())


def mode2_helper_encode(v_seq: np.ndarray, book: HelperCodebook, p_av: JointPmf,
                        eps_h1: float, gen: np.random.Generator) -> int:
    """Smallest bin holding an entry jointly typical with the observation;
    uniform bin if none."""
    n = book.entries.shape[2]
    rows = book.entries.reshape(-1, n)
    test = MembershipTest.build(p_av, n, eps_h1)
    mask = test.mask(rows, np.asarray(v_seq, dtype=np.int64))
    hits = np.nonzero(mask)[0]
    if hits.size:
        return int(hits[0] // book.per_bin)
    return rng_mod.uniform_index(gen, book.n_bins)


def mode2_receiver(j: int, book: HelperCodebook, y_seq: np.ndarray,
                   dlist: DecodedList, c_x: Codebook, p_ay: JointPmf,
                   p_xya: JointPmf, eps: float, eps_h1: float,
                   gen: np.random.Generator,
                   lookup_x: RowLookup | None = None) -> np.ndarray:
    """Recover the description from bin j, then decode the source against it.

    A unique in-bin entry typical with the side information becomes the
    description estimate (fresh iid draw otherwise); a unique list codeword
    typical with (side information, estimate) is released (iid source draw
    otherwise).
    """
    n = book.entries.shape[2]
    bin_rows = book.entries[j]
    test = MembershipTest.build(p_ay, n, eps_h1)
    mask = test.mask(bin_rows, np.asarray(y_seq, dtype=np.int64))
    hits = np.nonzero(mask)[0]
    if hits.size == 1:
        a_hat = bin_rows[hits[0]]
    else:
        a_hat = rng_mod.sample_flat(gen, book.gen_pmf, n)

    x_hat = _unique_final(
        dlist, c_x.entries, c_x, p_xya,
        given=merge_symbols((np.asarray(y_seq), a_hat),
                            (int(p_xya.axes[1]), int(p_xya.axes[2]))),
        eps=eps, lookup_x=lookup_x,
    )
    if x_hat is not None:
        return x_hat
    return rng_mod.sample_flat(gen, c_x.gen_pmf, c_x.length)


# ---------------------------------------------------------------------------


def pick_exponent_mode1(src: SourceModel, ch: BroadcastChannel, p_w: np.ndarray,
                        quantizer: Quantizer, delta: float, k: int,
                        eps_h: float = 0.05,
                        kappa: Fraction = Fraction(1)) -> tuple[float, float]:
    """List exponent and helper rate for a codeword-side helper.

    The exponent window is (max(H(X|Y_k) - kappa I(W;U_k), 0),
    kappa I(W;V_k|U_k) - 4 delta H(W)); the midpoint is returned together
    with R_k = D_k + eps_h.  An empty window means the chosen input pmf or
    delta cannot support a positive-rate helper scheme at receiver k.
    """
    p_w = np.asarray(p_w, dtype=np.float64)
    t_k = ch.single_receiver(k)
    joint = p_w[:, None] * t_k
    def hh(a):
        flat = a.reshape(-1)
        pos = flat[flat > 0]
        return float(-(pos * np.log2(pos)).sum()) if pos.size else 0.0

    h_w = hh(p_w)
    i_wu = max(0.0, hh(joint.sum(axis=0)) + h_w - hh(joint))
    mask = np.zeros((quantizer.n_outputs, p_w.size))
    mask[quantizer.map, np.arange(p_w.size)] = 1.0
    puv = mask * p_w[None, :] @ t_k
    i_wv_u = max(0.0, hh(puv) - hh(joint.sum(axis=0)))
    kap = float(kappa)
    lo = max(src.h_x_given_y(k) - kap * i_wu, 0.0)
    hi = kap * i_wv_u - 4.0 * delta * h_w
    if lo >= hi - 1e-12:
        raise ExponentWindowError(
            f"empty exponent window ({lo}, {hi}) at receiver {k}"
        )
    d = 0.5 * (lo + hi)
    return d, d + eps_h
