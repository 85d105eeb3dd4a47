"""Deterministic seed derivation.

Every stochastic component draws from its own labeled substream so that
adding or reordering one component never perturbs another's draws, and so
reruns are reproducible across processes (no salt-dependent ``hash()``).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*key) -> int:
    """Map a tuple of ints/strings to a stable 63-bit seed."""
    text = "/".join(repr(k) for k in key)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def spawn_rng(*key) -> np.random.Generator:
    """Independent generator for a labeled key, e.g. spawn_rng(seed, "warm")."""
    return np.random.default_rng(derive_seed(*key))
