"""Deterministic seed derivation for ensembles and simulated measurements.

Every stochastic quantity in the package is drawn from a PCG64 generator
whose seed is derived from a master seed plus a tuple of integer indices
(stream tag, sweep indices, realization index, ...).  Results are therefore
reproducible independent of execution order and worker count.
"""
from __future__ import annotations

import numpy as np

# stream tags namespace the independent random streams of a run
STREAM_SCREENS = 1
STREAM_TOMOGRAPHY = 2
STREAM_BOOTSTRAP = 3


def derive_seed(*keys: int) -> int:
    """Collapse integer keys into a single 64-bit seed.

    Uses numpy's SeedSequence entropy mixing, which is stable across
    platforms and numpy versions.
    """
    ss = np.random.SeedSequence(entropy=[int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(*keys: int) -> np.random.Generator:
    """PCG64 generator seeded from the derived key tuple."""
    return np.random.default_rng(np.random.SeedSequence(entropy=[int(k) for k in keys]))
