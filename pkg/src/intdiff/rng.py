"""Deterministic seed derivation.

Every random draw in the package flows from a single root seed. Child
seeds are derived by hashing the root together with a path of string/int
tags, so independent stages (generation, noise, dropout, replicates)
get independent, reproducible streams regardless of execution order.
"""

import hashlib

import numpy as np


def child_seed(root: int, *tags) -> int:
    """Derive a 63-bit child seed from ``root`` and a tag path.

    The same ``(root, *tags)`` always yields the same seed; distinct tag
    paths yield (for all practical purposes) independent seeds.
    """
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:8], "little") >> 1


def rng_for(root: int, *tags) -> np.random.Generator:
    """Generator seeded with ``child_seed(root, *tags)``."""
    return np.random.default_rng(child_seed(root, *tags))
