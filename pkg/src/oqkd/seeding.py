"""Deterministic seed management for reproducible Monte Carlo batches.

Every stochastic entry point takes an explicit seed; there is no ambient
randomness anywhere in the package.  Batch runners derive one child seed per
round with ``numpy.random.SeedSequence.spawn``, so rounds are statistically
independent, may be evaluated in any order (or in parallel), and the full
batch is bit-reproducible from the master seed alone.
"""

from __future__ import annotations

from typing import Iterable, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def rng_from(seed: SeedLike) -> np.random.Generator:
    """Return a ``numpy.random.Generator`` for an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def spawn_round_seeds(master_seed: int, n_rounds: int) -> list[np.random.SeedSequence]:
    """Derive ``n_rounds`` independent child seeds from one master seed.

    The split uses ``SeedSequence.spawn``: child ``i`` depends only on
    ``(master_seed, i)``, never on how many siblings were created before it,
    which keeps aggregation order-independent.
    """
    return np.random.SeedSequence(int(master_seed)).spawn(int(n_rounds))


def round_rngs(master_seed: int, n_rounds: int) -> Iterable[np.random.Generator]:
    """Yield one generator per round, derived via :func:`spawn_round_seeds`."""
    for child in spawn_round_seeds(master_seed, n_rounds):
        yield np.random.default_rng(child)
