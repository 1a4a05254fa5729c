"""Counter-based randomness for reproducible shot streams.

Every sampled run draws a fixed number of uniforms per shot from a Philox
stream keyed by the run seed, so shot i always sees the same draws no matter
how the loop is chunked or parallelized.  The identifier string is recorded
next to every counts table.
"""

from __future__ import annotations

import numpy as np

PRNG_ID = "philox4x64:fixed-stride:v1"

_DOMAIN = 0x71626E6368  # arbitrary constant separating qbench streams


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic generator for (seed, stream)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_DOMAIN + stream)])
    return np.random.Generator(np.random.Philox(key=key))


def shot_uniforms(seed: int, shots: int, stride: int) -> np.ndarray:
    """(shots, stride) array of unit uniforms; row i is shot i's budget."""
    return philox(seed).random(shots * stride).reshape(shots, stride)


def derive_seed(seed: int, index: int) -> int:
    """Stable child seed for sub-run ``index`` (e.g. one fire of a session)."""
    ss = np.random.SeedSequence(entropy=seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fresh_seed() -> int:
    """A random 63-bit seed for runs that did not specify one."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0] >> 1)
