"""Per-experiment seed derivation from a single master seed."""

import hashlib

import numpy as np


def derive_seed(master_seed: int, label: str) -> int:
    """First 8 bytes of sha256("<master>:<label>") as an unsigned integer."""
    digest = hashlib.sha256(f"{int(master_seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(master_seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, label))
