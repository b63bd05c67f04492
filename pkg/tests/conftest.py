import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import coopcast as cc


def bsc(p: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def make_source_xy(joint: np.ndarray) -> cc.SourceModel:
    return cc.SourceModel(joint=cc.JointPmf(joint), n_receivers=joint.ndim - 1)


def binary_example_source(rho: float) -> cc.SourceModel:
    """Uniform binary X, constant Y, helper observes X through a BSC(rho)."""
    j = np.zeros((2, 1, 2))
    for x in range(2):
        for v in range(2):
            j[x, 0, v] = 0.5 * ((1.0 - rho) if v == x else rho)
    return cc.SourceModel(joint=cc.JointPmf(j), n_receivers=1, has_helper_side=True)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))


def random_joint(gen, shape, floor=0.03) -> np.ndarray:
    raw = gen.random(shape) + floor
    return raw / raw.sum()


def random_channel(gen, nw, nu_sizes, floor=0.05) -> cc.BroadcastChannel:
    shape = (nw,) + tuple(nu_sizes)
    raw = gen.random(shape) + floor
    raw /= raw.reshape(nw, -1).sum(axis=1).reshape((nw,) + (1,) * len(nu_sizes))
    return cc.BroadcastChannel(raw)


def random_instance(seed: int, k: int = 1, nx: int = 2, ny: int = 2,
                    nw: int = 2, nu: int = 2):
    """Seeded (source, channel) pair with full-support joints."""
    gen = rng_for(seed)
    src = make_source_xy(random_joint(gen, (nx,) + (ny,) * k))
    ch = random_channel(gen, nw, (nu,) * k)
    return src, ch


def base_model_doc(p_side: float = 0.1, p_chan: float = 0.1) -> dict:
    """JSON model: uniform binary X, Y = X through BSC(p_side), channel BSC(p_chan)."""
    return {
        "alphabets": {"X": 2, "Y": [2], "W": 2, "U": [2]},
        "source_pmf": (0.5 * bsc(p_side)).flatten().tolist(),
        "channel": bsc(p_chan).flatten().tolist(),
        "quantizers": [[0, 1]],
        "kappa": {"num": 1, "den": 1},
    }


@pytest.fixture
def model_file(tmp_path):
    import json

    path = tmp_path / "model.json"
    path.write_text(json.dumps(base_model_doc()))
    return str(path)
