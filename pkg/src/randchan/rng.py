"""Seeded random streams.

Every Monte Carlo trial owns a generator derived from ``(master_seed, trial)``
through :class:`numpy.random.SeedSequence` spawn keys, so a trial's sample
depends only on that pair and never on scheduling.
"""
from __future__ import annotations

import os
import secrets

import numpy as np

SEED_ENV_VAR = "RANDCHAN_SEED"
SEED_MASK = (1 << 64) - 1


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator for one trial; ``stream`` separates independent uses within it."""
    seq = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng=None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def resolve_seed(seed=None) -> int:
    """Explicit seed, else ``$RANDCHAN_SEED``, else a fresh random 64-bit value."""
    if seed is not None:
        return int(seed) & SEED_MASK
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        return int(env, 0) & SEED_MASK
    return secrets.randbits(64)
