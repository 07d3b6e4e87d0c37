"""Deterministic RNG substream derivation.

Every Monte Carlo site derives its generator from (seed, *key) so results
are independent of evaluation order and thread scheduling.
"""
import numpy as np

# fixed tags keep substream families disjoint without string hashing
TAG_GRID = 1
TAG_REFINE = 2
TAG_SHARED = 3
TAG_SIM = 4
TAG_RESAMPLE = 5
TAG_PRIOR = 6


def substream(seed, *key):
    """Independent Generator for the site identified by integer key parts."""
    if seed is None:
        raise ValueError("seed is required for Monte Carlo evaluation")
    parts = [int(seed) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in key]
    return np.random.default_rng(parts)
