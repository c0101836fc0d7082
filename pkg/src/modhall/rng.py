"""Seed-derived RNG substreams.

All randomness in a run flows from one root seed. Named substreams keep the
stages independent: changing how one stage consumes randomness does not
perturb the draws any other stage sees. Stream names are mapped to integers
with crc32 so the derivation is stable across platforms and sessions.
"""

import zlib

import numpy as np


def substream(root_seed: int, *names) -> np.random.Generator:
    """Return a Generator for the substream identified by ``names``.

    ``names`` may mix strings and integers (e.g. ``("data", "train", 17)``
    for per-sample streams, safe to draw from in parallel workers).
    """
    keys = [int(root_seed) & 0xFFFFFFFF]
    for name in names:
        if isinstance(name, str):
            keys.append(zlib.crc32(name.encode("utf-8")))
        else:
            keys.append(int(name) & 0xFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))
