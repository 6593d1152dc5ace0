"""Derived random streams.

Every consumer of randomness asks for a generator keyed by the master seed
plus a path of use-site labels, so results never depend on the order in
which independent pieces of work are evaluated.
"""
import zlib

import numpy as np


def _key(part):
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def derive_seed_sequence(master_seed, *path):
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(_key(p) for p in path))


def derive_rng(master_seed, *path):
    """Return a ``numpy.random.Generator`` for ``(master_seed, *path)``."""
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(master_seed, *path)))


def derive_int(master_seed, *path):
    """A 63-bit integer seed derived from ``(master_seed, *path)``."""
    state = derive_seed_sequence(master_seed, *path).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
