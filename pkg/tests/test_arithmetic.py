import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tridisc.arithmetic import (
    FixedUnit, ZeroInput, add_mod1, cf_expand, convergent_gap_check,
    dist_nearest_int, mul_int_mod1, nearest_int, preset,
)

F = 128
SCALE = 1 << F

raws = st.integers(min_value=0, max_value=SCALE - 1)


def u(dec: str) -> FixedUnit:
    return FixedUnit.from_decimal(dec)


# ---- ingestion ----------------------------------------------------------


def test_preset_raws_match_expected_rounding():
    # frozen from an independent 60-digit mpmath computation
    assert preset("sqrt2m1").raw == 0x6A09E667F3BCC908B2FB1366EA957D3E
    assert preset("sqrt3m1").raw == 0xBB67AE8584CAA73B25742D7078B83B89
    assert preset("golden").raw == 0x9E3779B97F4A7C15F39CC0605CEDC834


def test_from_cf_quotients_golden():
    approx = FixedUnit.from_cf_quotients([1] * 120)
    assert approx.raw == preset("golden").raw


def test_serialization_round_trip():
    v = preset("sqrt2m1")
    assert FixedUnit.parse(v.to_str()) == v
    assert v.to_str().startswith("f=128:raw=0x")


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        FixedUnit(SCALE)
    with pytest.raises(ValueError):
        FixedUnit(-1)
    with pytest.raises(ValueError):
        FixedUnit(1, f=64)  # below minimum precision


# ---- add/mul ------------------------------------------------------------


def test_add_examples():
    assert add_mod1(u("0.25"), u("0.5")) == u("0.75")
    assert add_mod1(u("0.75"), u("0.75")) == u("0.5")
    v = preset("golden")
    assert add_mod1(v, FixedUnit(0)) == v


@settings(max_examples=50, deadline=None, derandomize=True)
@given(raws, raws, raws)
def test_add_commutative_associative(a, b, c):
    ua, ub, uc = FixedUnit(a), FixedUnit(b), FixedUnit(c)
    assert add_mod1(ua, ub) == add_mod1(ub, ua)
    assert add_mod1(add_mod1(ua, ub), uc) == add_mod1(ua, add_mod1(ub, uc))


def test_mul_examples():
    assert mul_int_mod1(4, u("0.25")) == FixedUnit(0)
    assert mul_int_mod1(3, u("0.75")) == u("0.25")


@settings(max_examples=20, deadline=None, derandomize=True)
@given(raws, st.integers(min_value=0, max_value=3000))
def test_mul_equals_iterated_addition(raw, n):
    v = FixedUnit(raw)
    acc = FixedUnit(0)
    for _ in range(n):
        acc = add_mod1(acc, v)
    assert mul_int_mod1(n, v) == acc


def test_mul_equals_iterated_addition_million():
    rng = random.Random(7)
    v = FixedUnit(rng.getrandbits(F))
    acc = 0
    for _ in range(10 ** 6):
        acc = (acc + v.raw) & (SCALE - 1)
    assert mul_int_mod1(10 ** 6, v).raw == acc


def test_mul_negative():
    v = preset("golden")
    assert mul_int_mod1(-1, v).raw == SCALE - v.raw


# ---- distance and nearest integer ----------------------------------------


def test_dist_examples():
    assert dist_nearest_int(u("0.75")) == u("0.25")
    assert dist_nearest_int(FixedUnit(0)) == FixedUnit(0)
    assert dist_nearest_int(u("0.5")) == u("0.5")


@settings(max_examples=50, deadline=None, derandomize=True)
@given(raws.filter(lambda r: r != 0))
def test_dist_symmetry(raw):
    v = FixedUnit(raw)
    w = FixedUnit(SCALE - raw)  # 1 - v
    assert dist_nearest_int(v) == dist_nearest_int(w)


def test_nearest_int_examples():
    assert nearest_int(2, u("0.25")) == 2
    assert nearest_int(2, u("0.75")) == 3
    assert nearest_int(2, u("0.5")) == 2  # half to even
    assert nearest_int(3, u("0.5")) == 4
    assert nearest_int(-3, u("0.5")) == -2


# ---- continued fractions --------------------------------------------------


def naive_cf(num: int, den: int, depth: int):
    """Euclidean expansion of num/den through Fractions only."""
    x = Fraction(num, den)
    quots = []
    while len(quots) < depth and x != 0:
        inv = 1 / x
        a = inv.numerator // inv.denominator
        quots.append(a)
        x = inv - a
    return quots


def test_cf_golden_quotients_and_fibonacci():
    cf = cf_expand(preset("golden"), 12)
    assert list(cf.quotients) == [1] * 12
    assert [q for _, q in cf.convergents[:7]] == [1, 2, 3, 5, 8, 13, 21]
    assert [p for p, _ in cf.convergents[:7]] == [1, 1, 2, 3, 5, 8, 13]
    assert not cf.exact


def test_cf_sqrt2_quotients():
    cf = cf_expand(preset("sqrt2m1"), 15)
    assert list(cf.quotients) == [2] * 15


def test_cf_half_terminates():
    cf = cf_expand(u("0.5"), 5)
    assert cf.quotients == (2,)
    assert cf.convergents == ((1, 2),)
    assert cf.exact


def test_cf_zero_raises():
    with pytest.raises(ZeroInput):
        cf_expand(FixedUnit(0), 3)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(raws.filter(lambda r: r != 0), st.integers(min_value=1, max_value=25))
def test_cf_matches_euclid_oracle(raw, depth):
    cf = cf_expand(FixedUnit(raw), depth)
    assert list(cf.quotients) == naive_cf(raw, SCALE, depth)
    # convergents reproduce the value when exact
    if cf.exact:
        p, q = cf.convergents[-1]
        assert Fraction(p, q) == Fraction(raw, SCALE)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(raws.filter(lambda r: r != 0))
def test_cf_determinant_identity(raw):
    cf = cf_expand(FixedUnit(raw), 20)
    prev = (0, 1)  # (p0, q0)
    for p, q in cf.convergents:
        assert abs(p * prev[1] - prev[0] * q) == 1
        prev = (p, q)


def test_cf_recurrence_identity():
    cf = cf_expand(preset("sqrt3m1"), 20)
    ps = [0] + [p for p, _ in cf.convergents]
    qs = [1] + [q for _, q in cf.convergents]
    pprev, qprev = 1, 0  # p_{-1}, q_{-1}
    for j, a in enumerate(cf.quotients):
        assert ps[j + 1] == a * ps[j] + (pprev if j == 0 else ps[j - 1])
        assert qs[j + 1] == a * qs[j] + (qprev if j == 0 else qs[j - 1])


def test_gap_check_golden_and_half():
    v = preset("golden")
    cf = cf_expand(v, 25)
    checks = convergent_gap_check(cf, v)
    assert len(checks) == 24  # truncated expansion: final j excluded
    assert all(checks)
    assert convergent_gap_check(cf_expand(u("0.5"), 3), u("0.5")) == [True]


def test_gap_check_norm_decreasing():
    v = preset("sqrt2m1")
    cf = cf_expand(v, 18)
    dists = [dist_nearest_int(mul_int_mod1(q, v)).raw
             for _, q in cf.convergents]
    assert all(a > b for a, b in zip(dists, dists[1:]))


def test_gap_check_random_trials():
    rng = random.Random(11)
    for _ in range(200):
        v = FixedUnit(rng.getrandbits(F))
        if v.raw == 0:
            continue
        cf = cf_expand(v, 12)
        assert all(convergent_gap_check(cf, v))
