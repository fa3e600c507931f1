"""Seed plumbing: every stochastic surface accepts an int, a sequence of
ints, or a prebuilt SeedSequence, and derives replica streams as
(master, index) so aggregation order and worker count never matter."""

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def rng_from(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed)))


def child_seed(master, index: int) -> np.random.SeedSequence:
    if isinstance(master, np.random.SeedSequence):
        return master.spawn(index + 1)[index]
    return np.random.SeedSequence([int(master), int(index)])


def derived_int(master, index: int) -> int:
    """Stable 64-bit integer sub-seed for surfaces that want plain ints."""
    return int(child_seed(master, index).generate_state(1, np.uint64)[0])
