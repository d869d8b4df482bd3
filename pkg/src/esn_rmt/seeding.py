"""Labeled substream derivation: one user seed, many disjoint random streams.

Every sampling operation in the package draws from a substream addressed by
(seed, domain, *indices).  Distinct domains (inputs, label noise, test data,
reservoir weights, ...) never share a stream, and per-trial indices make
results independent of execution order and worker count.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class SeedDomain(IntEnum):
    INPUTS = 0
    NOISE = 1
    TEST_INPUTS = 2
    TEST_NOISE = 3
    RESERVOIR = 4
    EXPERIMENT = 5


def substream(seed: int, domain: SeedDomain, *indices: int) -> np.random.Generator:
    """Generator for the substream addressed by (seed, domain, *indices)."""
    key = (int(domain),) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def child_seed(seed: int, domain: SeedDomain, *indices: int) -> int:
    """Derive a plain integer seed for a nested component (e.g. one grid point)."""
    key = (int(domain),) + tuple(int(i) for i in indices)
    state = np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1, np.uint64)
    return int(state[0])
