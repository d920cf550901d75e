"""Deterministic RNG derivation.

All randomness in the pipeline flows from numpy Generators derived here so
that runs are reproducible and per-image decisions do not depend on iteration
order.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    # crc32 is stable across platforms and python versions, unlike hash()
    return zlib.crc32(str(key).encode("utf-8"))


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Generator seeded from a base seed plus any number of string/int keys.

    The same (seed, keys) always yields the same stream, independent of when
    or in which order other generators were derived.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def torch_seed_from(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed suitable for torch.manual_seed."""
    return int(rng.integers(0, 2**63 - 1))
