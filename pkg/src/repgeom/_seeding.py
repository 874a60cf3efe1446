"""Seed derivation.

A run has one integer master seed. Each consumer draws from its own stream,
``SeedSequence([master, blake2b64(name)])``, so adding or reordering
consumers never shifts another consumer's random numbers.
"""
import hashlib

import numpy as np


def subseed(name):
    return int.from_bytes(hashlib.blake2b(name.encode(), digest_size=8).digest(), "little")


def derive_rng(seed, name):
    if seed is None:
        seed = 0
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.default_rng(np.random.SeedSequence([seed, subseed(name)]))
