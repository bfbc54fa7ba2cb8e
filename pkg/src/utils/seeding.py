"""Reproducible random streams.

All randomness flows from a 64-bit master seed through ``SeedSequence``
spawn keys into a counter-based ``Philox`` generator, so a stream depends
only on ``(seed, *keys)`` and never on scheduling or worker count.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``."""
    sequence = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed for a sub-stream, e.g. ``(master, point, trial)``."""
    sequence = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
