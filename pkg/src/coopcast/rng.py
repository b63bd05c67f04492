"""Deterministic counter-based random streams.

Every random draw in the package comes from a Philox-4x64-10 counter-based
generator.  A stream is addressed by (master_seed, stream_index, role) and
is materialised as a numpy Generator with key

    key = [master_seed, (role_id << 56) ^ stream_index]

so streams for different trials and roles are independent and can be
regenerated in any order.  Sampling from a pmf uses inverse-CDF over the
row-major flattening of the tensor (the canonical symbol ordering), which
makes sequences bit-reproducible across platforms.
"""

from __future__ import annotations

import numpy as np

ROLE_IDS = {
    "source": 1,
    "codebook": 2,
    "channel": 3,
    "helper": 4,
    "decoder-fallback": 5,
    "optimizer": 6,
}

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, stream_index: int, role: str) -> np.random.Generator:
    """Generator for the (master_seed, stream_index, role) stream."""
    role_id = ROLE_IDS[role]
    word0 = np.uint64(master_seed & _MASK64)
    word1 = np.uint64(((role_id << 56) ^ (stream_index & ((1 << 56) - 1))) & _MASK64)
    return np.random.Generator(np.random.Philox(key=np.array([word0, word1], dtype=np.uint64)))


def sample_flat(gen: np.random.Generator, flat_pmf: np.ndarray, n: int) -> np.ndarray:
    """n inverse-CDF draws of flat symbol indices from a flattened pmf."""
    cum = np.cumsum(flat_pmf)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, gen.random(n), side="right")
    return np.minimum(idx, flat_pmf.size - 1).astype(np.int64)


def uniform_index(gen: np.random.Generator, n: int) -> int:
    """One uniform draw from {0, ..., n-1}."""
    return min(int(gen.random() * n), n - 1)
