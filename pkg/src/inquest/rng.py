"""Deterministic seed fan-out.

A single master seed is expanded into independent component seeds by
hashing the seed together with a label path. Adding a new pipeline stage
under a fresh label never perturbs the randomness of existing stages, and
results are independent of scheduling order.
"""

import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """Derive a 63-bit component seed from a master seed and a label path."""
    key = str(int(master)) + "/" + "/".join(str(x) for x in labels)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def spawn(master: int, *labels) -> np.random.Generator:
    """A numpy Generator seeded from `derive_seed(master, *labels)`."""
    return np.random.default_rng(derive_seed(master, *labels))
