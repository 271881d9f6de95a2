"""Named, reproducible random substreams.

Every random draw in the package flows from one root seed through named
substreams, so each stage (synthesis, init, shuffling, ...) is independently
reproducible and insensitive to what other stages consumed.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream_seed(seed: int, *names) -> np.random.SeedSequence:
    """Derive a child seed sequence from ``seed`` and a path of names.

    Names may be strings or integers; strings are hashed with CRC32 so the
    derivation is stable across runs, platforms and processes.
    """
    keys = [int(seed)]
    for name in names:
        if isinstance(name, str):
            keys.append(zlib.crc32(name.encode("utf-8")))
        else:
            keys.append(int(name))
    return np.random.SeedSequence(keys)


def substream(seed: int, *names) -> np.random.Generator:
    """A generator seeded from the named substream."""
    return np.random.default_rng(substream_seed(seed, *names))
