"""Deterministic seed derivation.

All randomness in the package flows through numpy's PCG64 generator seeded
via SeedSequence. Normal variates use numpy's ziggurat sampler, so outputs
are bit-identical within one numpy build for a fixed seed. Sub-streams are
derived from (seed, *path) so parallel and serial execution agree.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, *path) into a single 64-bit sub-seed."""
    entropy = [seed & MASK64] + [p & MASK64 for p in path]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


def generator(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the sub-stream identified by (seed, *path)."""
    entropy = [seed & MASK64] + [p & MASK64 for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
