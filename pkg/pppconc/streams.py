"""Counter-based random streams keyed by integer paths.

A stream is fully determined by ``(seed, *key)``: the same key always yields
the same Philox generator, and distinct keys yield independent streams. The
harness keys replications as ``(seed, r)`` or ``(seed, tag, ..., r)`` so no
stream depends on scheduling.
"""

import numpy as np

from shared.errors import DomainError

SEED_BITS = 64

# Key tags that keep experiment families on disjoint stream trees
TAG_RISK = 1
TAG_XI = 2
TAG_BALL = 3
TAG_BOOTSTRAP = 4
TAG_CAMPBELL = 5


def make_stream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, *key)``."""
    if seed < 0 or seed >= 2**SEED_BITS:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if any(k < 0 for k in key):
        raise DomainError(f"stream key components must be nonnegative, got {key}")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))
