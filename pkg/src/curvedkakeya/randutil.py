"""Deterministic seeded randomness.

Every randomized routine takes an explicit 64-bit seed and derives independent
child streams per trial index, so results are reproducible bit-for-bit across
runs, platforms, and thread counts.
"""

from __future__ import annotations

import hashlib
import random
from fractions import Fraction

DYADIC_BITS = 20


def child_seed(seed: int, *path: object) -> int:
    """Stable 64-bit child seed derived from a root seed and a path."""
    material = ":".join([str(seed)] + [str(p) for p in path]).encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def child_rng(seed: int, *path: object) -> random.Random:
    return random.Random(child_seed(seed, *path))


def dyadic_uniform(rng: random.Random, magnitude: Fraction) -> Fraction:
    """Uniform dyadic-grid rational in [-magnitude, magnitude].

    The value is magnitude * k / 2^DYADIC_BITS with integer k, so exact
    backends stay exact.
    """
    k = rng.randint(-(1 << DYADIC_BITS), 1 << DYADIC_BITS)
    return Fraction(magnitude) * Fraction(k, 1 << DYADIC_BITS)


def uniform(rng: random.Random, lo: float, hi: float) -> float:
    return lo + (hi - lo) * rng.random()
