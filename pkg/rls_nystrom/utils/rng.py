"""
Seed handling. All randomness in the toolkit flows through numpy Generators
built from 64-bit seeds, and derived streams are reproducible functions of
(seed, labels).
"""

import numpy as np

_SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, *labels: int) -> int:
    """Derive an independent 64-bit seed from a parent seed and integer labels.

    Args:
        seed: Parent seed (any integer, reduced modulo 2**64)
        *labels: Nonnegative integers naming the stream, e.g. (depth, stream)

    Returns:
        Derived seed in [0, 2**64)
    """
    entropy = [int(seed) & _SEED_MASK] + [int(label) & _SEED_MASK for label in labels]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def make_rng(seed: int) -> np.random.Generator:
    """Build a PCG64 generator from a 64-bit seed."""
    return np.random.default_rng(int(seed) & _SEED_MASK)


def seed32(seed: int) -> int:
    """Fold a 64-bit seed into the 32-bit range accepted by legacy APIs."""
    seed = int(seed) & _SEED_MASK
    return (seed ^ (seed >> 32)) & 0xFFFFFFFF
