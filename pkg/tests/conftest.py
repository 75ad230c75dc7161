import random
from fractions import Fraction

import pytest

from tridisc.arithmetic import FixedUnit, preset

F = 128
SCALE = 1 << F


@pytest.fixture
def alpha():
    return preset("sqrt2m1"), preset("sqrt3m1")


@pytest.fixture
def golden():
    return preset("golden")


def rand_unit(rng: random.Random, f: int = F) -> FixedUnit:
    return FixedUnit(rng.getrandbits(f), f)


def naive_in_triangle(p1_raw: int, p2_raw: int, x1_raw: int, x2_raw: int,
                      f: int = F) -> bool:
    """Membership through Fractions; shares no code with the engine."""
    scale = 1 << f
    p1 = Fraction(p1_raw, scale)
    p2 = Fraction(p2_raw, scale)
    x1 = Fraction(x1_raw, scale)
    x2 = Fraction(x2_raw, scale)
    return p1 < x1 and p2 < x2 and p1 / x1 + p2 / x2 < 1


def naive_hits(alpha, a, x1_raw, x2_raw, n, f: int = F) -> list[int]:
    """Per-point recount via direct multiplication, no streaming."""
    scale = 1 << f
    out = []
    h = 0
    for m in range(1, n + 1):
        p1 = (a[0].raw + m * alpha[0].raw) % scale
        p2 = (a[1].raw + m * alpha[1].raw) % scale
        if naive_in_triangle(p1, p2, x1_raw, x2_raw, f):
            h += 1
        out.append(h)
    return out
