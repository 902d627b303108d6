"""Seed handling: every random draw flows from one 64-bit seed.

Subsystems get independent, reproducible streams by spawning a SeedSequence
keyed on (seed, tag...), so adding a new consumer never shifts the draws of an
existing one.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, int):
        return tag & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def rng_stream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for (seed, tags); same arguments, same stream."""
    key = tuple(_tag_to_int(t) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
