"""Sources, broadcast channels, quantizers and their joint distributions.

Model files are JSON with the following fields (all tensors flattened
row-major; row-major order is normative):

    {
      "alphabets": {"X": 2, "Y": [2, 2], "W": 2, "U": [2, 2], "V": [2, 2]},
      "source_pmf": [...],          # over (X, Y_1..Y_K) or (X, Y_1..Y_K, V_1..V_K)
      "channel":    [...],          # over (W, U_1..U_K)
      "quantizers": [[0, 1], ...],  # optional, one per receiver, length |W|
      "kappa":      {"num": 1, "den": 1}
    }

"V" is present only for source-side helper models (Mode 2).  Quantizer
codomain sizes are inferred as max(map)+1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from . import rng as rng_mod
from .exceptions import ModelError, PmfError
from .info import JointPmf, MASS_TOL, conditional_entropy, entropy


@dataclass(frozen=True)
class SourceModel:
    """Joint law of (X, Y_1..Y_K) plus, for Mode 2, helper observations V_1..V_K.

    Axis order of `joint` is (X, Y_1, ..., Y_K) or (X, Y_1, ..., Y_K, V_1, ..., V_K).
    """

    joint: JointPmf
    n_receivers: int
    has_helper_side: bool = False

    def __post_init__(self):
        expect = 1 + self.n_receivers * (2 if self.has_helper_side else 1)
        if self.n_receivers < 1:
            raise ModelError("need at least one receiver")
        if self.joint.n_axes != expect:
            raise ModelError(
                f"source joint has {self.joint.n_axes} axes, expected {expect}"
            )

    @property
    def x_axis(self) -> int:
        return 0

    def y_axis(self, k: int) -> int:
        self._check_k(k)
        return 1 + k

    def v_axis(self, k: int) -> int:
        if not self.has_helper_side:
            raise ModelError("model has no helper-side observations")
        self._check_k(k)
        return 1 + self.n_receivers + k

    def pmf_x(self) -> JointPmf:
        return self.joint.marginal([0])

    def pmf_xy(self, k: int) -> JointPmf:
        return self.joint.marginal([0, self.y_axis(k)])

    def pmf_xyv(self, k: int) -> JointPmf:
        return self.joint.marginal([0, self.y_axis(k), self.v_axis(k)])

    def h_x(self) -> float:
        return entropy(self.pmf_x())

    def h_x_given_y(self, k: int) -> float:
        return conditional_entropy(self.pmf_xy(k), given_axes=[1])

    def _check_k(self, k: int) -> None:
        if not 0 <= k < self.n_receivers:
            raise ModelError(f"receiver index {k} out of range")


@dataclass(frozen=True)
class BroadcastChannel:
    """Memoryless one-to-K conditional law T(u_1..u_K | w).

    `law` has shape (|W|, |U_1|, ..., |U_K|); each w-slice sums to 1.
    """

    law: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.law, dtype=np.float64)
        if arr.ndim < 2:
            raise ModelError("channel law needs input plus at least one output axis")
        if np.any(arr < 0):
            raise ModelError("channel law has a negative entry")
        row_mass = arr.reshape(arr.shape[0], -1).sum(axis=1)
        if np.any(np.abs(row_mass - 1.0) > MASS_TOL):
            raise ModelError("channel rows must each sum to 1 within 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "law", arr)

    @property
    def n_inputs(self) -> int:
        return self.law.shape[0]

    @property
    def n_receivers(self) -> int:
        return self.law.ndim - 1

    def output_sizes(self) -> tuple[int, ...]:
        return self.law.shape[1:]

    def single_receiver(self, k: int) -> np.ndarray:
        """Marginal conditional law T(u_k | w) as a (|W|, |U_k|) matrix."""
        drop = tuple(1 + j for j in range(self.n_receivers) if j != k)
        return self.law.sum(axis=drop) if drop else self.law


@dataclass(frozen=True)
class Quantizer:
    """Total deterministic map from the channel input alphabet onto V."""

    map: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.map, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ModelError("quantizer map must be a nonempty vector")
        if np.any(arr < 0):
            raise ModelError("quantizer values must be nonnegative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "map", arr)

    @property
    def n_outputs(self) -> int:
        return int(self.map.max()) + 1


@dataclass(frozen=True)
class AuxiliaryChannel:
    """Row-stochastic description channel P(A|V) with |A| <= |V|."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=np.float64)
        if arr.ndim != 2:
            raise ModelError("auxiliary channel must be a matrix")
        if arr.shape[1] > arr.shape[0]:
            raise ModelError("auxiliary alphabet may not exceed |V|")
        if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=1) - 1.0) > MASS_TOL):
            raise ModelError("auxiliary channel rows must be pmfs")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)


@dataclass(frozen=True)
class BandwidthConfig:
    """Blocklengths tied by the bandwidth expansion factor n_c / n_s = kappa."""

    kappa: Fraction
    n_s: int
    n_c: int

    def __post_init__(self):
        if self.kappa <= 0:
            raise ModelError("kappa must be positive")
        if self.n_s < 1 or self.n_c < 1:
            raise ModelError("blocklengths must be positive")
        if Fraction(self.n_c, self.n_s) != self.kappa:
            raise ModelError(
                f"n_c/n_s = {self.n_c}/{self.n_s} does not equal kappa = {self.kappa}"
            )

    @classmethod
    def for_source_length(cls, kappa: Fraction, n_s: int) -> "BandwidthConfig":
        n_c = kappa * n_s
        if n_c.denominator != 1:
            raise ModelError(f"n_s = {n_s} incompatible with kappa = {kappa}")
        return cls(kappa=kappa, n_s=n_s, n_c=int(n_c))


@dataclass(frozen=True)
class Model:
    """A complete problem instance: source, channel, quantizers, kappa."""

    source: SourceModel
    channel: BroadcastChannel
    quantizers: tuple[Quantizer, ...] | None
    kappa: Fraction

    def __post_init__(self):
        if self.channel.n_receivers != self.source.n_receivers:
            raise ModelError("source and channel disagree on receiver count")
        if self.quantizers is not None and len(self.quantizers) != self.source.n_receivers:
            raise ModelError("need one quantizer per receiver")
        if self.quantizers is not None:
            for q in self.quantizers:
                if q.map.size != self.channel.n_inputs:
                    raise ModelError("quantizer domain must match |W|")


def channel_joint(p_w: JointPmf, ch: BroadcastChannel) -> JointPmf:
    """Joint law of (W, U_1..U_K) = input pmf times the channel rows."""
    if p_w.n_axes != 1 or p_w.axes[0] != ch.n_inputs:
        raise ModelError("input pmf does not match channel input alphabet")
    shape = (ch.n_inputs,) + (1,) * ch.n_receivers
    return JointPmf(p_w.probs.reshape(shape) * ch.law)


def push_quantizer(joint: JointPmf, q: Quantizer, w_axis: int) -> JointPmf:
    """Append the deterministic image V = q(W) as a trailing axis."""
    if not 0 <= w_axis < joint.n_axes:
        raise ModelError(f"axis {w_axis} out of range")
    if q.map.size != joint.axes[w_axis]:
        raise ModelError("quantizer domain does not match the W axis")
    nv = q.n_outputs
    onehot = np.zeros((q.map.size, nv))
    onehot[np.arange(q.map.size), q.map] = 1.0
    expand = [1] * (joint.n_axes + 1)
    expand[w_axis] = q.map.size
    expand[-1] = nv
    return JointPmf(joint.probs[..., None] * onehot.reshape(expand))


def attach_auxiliary(src: SourceModel, aux: AuxiliaryChannel, k: int) -> JointPmf:
    """Joint over (X, Y_k, V_k, A_k) with A depending on the rest only via V."""
    p_xyv = src.pmf_xyv(k)
    if aux.matrix.shape[0] != p_xyv.axes[2]:
        raise ModelError("auxiliary rows must match |V_k|")
    return JointPmf(p_xyv.probs[..., None] * aux.matrix[None, None, :, :])


def min_support(p: JointPmf) -> float:
    """Smallest strictly positive pmf entry."""
    flat = p.flat()
    return float(flat[flat > 0].min())


def sample_iid(p: JointPmf, n: int, gen: np.random.Generator) -> tuple[np.ndarray, ...]:
    """n iid draws from p, returned as one symbol sequence per axis."""
    if n < 1:
        raise ModelError("need n >= 1")
    flat_idx = rng_mod.sample_flat(gen, p.flat(), n)
    coords = np.unravel_index(flat_idx, p.axes)
    return tuple(np.ascontiguousarray(c, dtype=np.int64) for c in coords)


def transmit(w_seq: np.ndarray, ch: BroadcastChannel, gen: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Pass a codeword through the channel; one output sequence per receiver.

    Outputs at different receivers stay correlated exactly as the joint rows
    dictate; positions are independent.
    """
    w_seq = np.asarray(w_seq)
    if w_seq.min() < 0 or w_seq.max() >= ch.n_inputs:
        raise ModelError("codeword symbol outside channel input alphabet")
    rows = ch.law.reshape(ch.n_inputs, -1)
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    r = gen.random(w_seq.size)
    flat = (cum[w_seq] < r[:, None]).sum(axis=1)
    flat = np.minimum(flat, rows.shape[1] - 1)
    coords = np.unravel_index(flat, ch.output_sizes())
    return tuple(np.ascontiguousarray(c, dtype=np.int64) for c in coords)


# ---------------------------------------------------------------------------
# JSON model files


def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_model(path: str) -> Model:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelError(f"cannot read model file: {e}") from e
    return model_from_dict(doc)


def model_from_dict(doc: dict) -> Model:
    try:
        alph = doc["alphabets"]
        nx = int(alph["X"])
        ny = [int(v) for v in _as_list(alph["Y"])]
        nw = int(alph["W"])
        nu = [int(v) for v in _as_list(alph["U"])]
        nv = [int(v) for v in _as_list(alph["V"])] if "V" in alph else None
        kap = doc["kappa"]
        kappa = Fraction(int(kap["num"]), int(kap["den"]))
        src_flat = np.asarray(doc["source_pmf"], dtype=np.float64)
        ch_flat = np.asarray(doc["channel"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise ModelError(f"malformed model file: {e}") from e

    k = len(ny)
    if len(nu) != k or (nv is not None and len(nv) != k):
        raise ModelError("alphabet lists disagree on receiver count")
    src_shape = tuple([nx] + ny + (nv if nv is not None else []))
    ch_shape = tuple([nw] + nu)
    if src_flat.size != int(np.prod(src_shape)):
        raise ModelError("source_pmf length does not match alphabets")
    if ch_flat.size != int(np.prod(ch_shape)):
        raise ModelError("channel length does not match alphabets")

    try:
        source = SourceModel(
            joint=JointPmf(src_flat.reshape(src_shape)),
            n_receivers=k,
            has_helper_side=nv is not None,
        )
        channel = BroadcastChannel(ch_flat.reshape(ch_shape))
        quantizers = None
        if doc.get("quantizers") is not None:
            quantizers = tuple(Quantizer(np.asarray(q, dtype=np.int64)) for q in doc["quantizers"])
        return Model(source=source, channel=channel, quantizers=quantizers, kappa=kappa)
    except PmfError as e:
        raise ModelError(str(e)) from e


def model_to_dict(m: Model) -> dict:
    alph = {
        "X": m.source.joint.axes[0],
        "Y": [m.source.joint.axes[1 + k] for k in range(m.source.n_receivers)],
        "W": m.channel.n_inputs,
        "U": list(m.channel.output_sizes()),
    }
    if m.source.has_helper_side:
        off = 1 + m.source.n_receivers
        alph["V"] = [m.source.joint.axes[off + k] for k in range(m.source.n_receivers)]
    doc = {
        "alphabets": alph,
        "source_pmf": m.source.joint.flat().tolist(),
        "channel": m.channel.law.reshape(-1).tolist(),
        "kappa": {"num": m.kappa.numerator, "den": m.kappa.denominator},
    }
    if m.quantizers is not None:
        doc["quantizers"] = [q.map.tolist() for q in m.quantizers]
    return doc


def save_model(m: Model, path: str) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(m), f, indent=2, sort_keys=True)
        f.write("\n")
