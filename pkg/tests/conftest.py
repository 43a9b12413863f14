import random
from fractions import Fraction

import pytest

from curvedkakeya.jets import EXACT, Jet
from curvedkakeya.phases import Phase


def random_fraction(rng: random.Random, height: int = 1000) -> Fraction:
    num = rng.randint(-height, height)
    den = rng.randint(1, height)
    return Fraction(num, den)


def random_jet(rng: random.Random, num_vars: int, order: int,
               height: int = 1000, density: float = 0.5) -> Jet:
    coeffs = {}
    for exps in _all_exps(num_vars, order):
        if rng.random() < density:
            coeffs[exps] = random_fraction(rng, height)
    return Jet(num_vars, order, coeffs, EXACT)


def _all_exps(num_vars: int, order: int):
    if num_vars == 1:
        for e in range(order + 1):
            yield (e,)
        return
    for head in range(order + 1):
        for tail in _all_exps(num_vars - 1, order - head):
            yield (head,) + tail


def random_phase(rng: random.Random, n: int = 3, order: int = 6,
                 height: int = 8) -> Phase:
    """x . y plus a random polynomial in (t, y) with y-degree >= 2: the rank
    condition holds automatically and the origin stays a valid base point."""
    nv = 2 * n - 1
    coeffs = {}
    for i in range(n - 1):
        exps = [0] * nv
        exps[i] = 1
        exps[n + i] = 1
        coeffs[tuple(exps)] = Fraction(1)
    for h in range(1, order - 1):
        for i in range(n - 1):
            for j in range(i, n - 1):
                if h + 2 > order or rng.random() < 0.4:
                    continue
                exps = [0] * nv
                exps[n - 1] = h
                exps[n + i] += 1
                exps[n + j] += 1
                coeffs[tuple(exps)] = Fraction(rng.randint(-height, height), 8)
    return Phase(n, Jet(nv, order, coeffs, EXACT))


@pytest.fixture
def rng():
    return random.Random(20240817)
