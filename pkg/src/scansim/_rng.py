"""Deterministic RNG derivation.

Every random stream in the package is derived from one global seed plus a
tuple of string labels (trial id, purpose), hashed stably, so adding trials
or new purposes never shifts the draws of existing ones. Python's builtin
``hash`` is salted per process and must not be used here.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed_sequence(seed: int, *labels: str) -> np.random.SeedSequence:
    digest = hashlib.sha256("\x1f".join(labels).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *words])


def derive_rng(seed: int, *labels: str) -> np.random.Generator:
    """Generator for (seed, labels...); stable across runs and platforms."""
    return np.random.default_rng(derive_seed_sequence(seed, *labels))
