"""
Seed derivation for synthetic artifacts

Every synthetic file gets its own generator seeded from (master_seed, file_index),
so regenerating a single file reproduces it exactly without replaying the others.
"""
import numpy as np


def derive_seed(master_seed: int, file_index: int) -> int:
    """
    Derive the per-artifact seed

    Args:
        master_seed: Campaign master seed
        file_index: Stable index of the artifact within the campaign

    Returns:
        32-bit unsigned seed
    """
    sequence = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, int(file_index)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def generator(seed: int) -> np.random.Generator:
    """PCG64 generator for a derived seed"""
    return np.random.default_rng(seed)
