"""Named random streams derived from one root seed.

Every consumer asks for its own stream by purpose and identity, e.g.
``substream(seed, "fading", video_id, user_id)``, so adding a sweep axis or reordering
work never shifts the draws of an unrelated consumer.
"""

import zlib

import numpy as np

SeedLike = int | np.random.Generator


def _name_key(name: str | int) -> int:
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError(f"stream names must be non-negative, got {name}")
        return int(name)
    return zlib.crc32(str(name).encode("utf-8"))


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """Return the generator for stream ``names`` under root ``seed``."""
    seq = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(_name_key(n) for n in names),
    )
    return np.random.default_rng(seq)


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept either a root seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
