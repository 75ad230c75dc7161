import math
import random
from fractions import Fraction

import pytest

from conftest import F, SCALE, rand_unit
from tridisc.arithmetic import FixedUnit, cf_expand, nearest_int_scaled, preset
from tridisc.smalldivisors import (
    DepthUnavailable, FrequencyBox, PhiFunction, RangeTooLarge, ShellSpec,
    cf_harmonic_sum, e_expected, enumerate_box, in_shell_set, khintchine_lhs,
    khintchine_solutions, large_term_sum, partial_quotient_sum_test,
    shell_classify, tail_sums_S1_S2, z_count,
)
from tridisc.spectral import nearest_n3


PHI_LINEAR = PhiFunction("n", lambda x: x, False)


def naive_box(box: FrequencyBox, alpha):
    """Brute double loop over a generous n2 range."""
    out = []
    tau_fr = Fraction(box.tau.raw, SCALE)
    lim = int(abs(box.v2) + abs(box.w2)
              + (abs(box.v1) + abs(box.w1) + 2)) + 2
    for n1 in range(math.ceil(box.v1), math.ceil(box.w1)):
        for n2 in range(-lim, lim + 1):
            d = n1 * tau_fr - n2
            if not Fraction(box.v2) <= d < Fraction(box.w2):
                continue
            if box.require_far and abs(d) < Fraction(1, 2):
                continue
            out.append((n1, n2,
                        nearest_int_scaled(n1 * alpha[0].raw + n2 * alpha[1].raw, F)))
    return out


def test_enumerate_box_matches_naive(alpha, golden):
    rng = random.Random(13)
    for _ in range(10):
        v1 = rng.randint(-30, 20)
        w1 = v1 + rng.randint(1, 25)
        v2 = rng.uniform(-5, 2)
        w2 = v2 + rng.uniform(0.3, 6)
        far = rng.random() < 0.5
        box = FrequencyBox(v1, w1, v2, w2, golden, far)
        assert sorted(enumerate_box(box, alpha)) == sorted(naive_box(box, alpha))


def test_enumerate_box_nearest_when_unit_window(alpha, golden):
    # window (-1/2, 1/2] around n1 tau selects exactly the nearest integer
    box = FrequencyBox(1, 30, -0.5, 0.5, golden, require_far=False)
    members = list(enumerate_box(box, alpha))
    assert len(members) == 29
    for n1, n2, _ in members:
        assert n2 == nearest_int_scaled(n1 * golden.raw, F)


def test_enumerate_box_far_filter_removes_nearest(alpha, golden):
    wide = FrequencyBox(1, 30, -2.0, 2.0, golden, require_far=False)
    far = FrequencyBox(1, 30, -2.0, 2.0, golden, require_far=True)
    all_pairs = {(a, b) for a, b, _ in enumerate_box(wide, alpha)}
    far_pairs = {(a, b) for a, b, _ in enumerate_box(far, alpha)}
    removed = all_pairs - far_pairs
    for n1, n2 in removed:
        d = abs(n1 * golden.raw - n2 * SCALE)
        assert 2 * d < SCALE  # exactly the near-divisor pairs


def test_enumerate_box_range_guard(golden, alpha):
    with pytest.raises(RangeTooLarge):
        list(enumerate_box(FrequencyBox(0, 2e9, 0, 1, golden), alpha))


# ---- Lemma 3.1 sum -----------------------------------------------------------


def naive_large_term_sum(alpha, tau, N, E, B):
    theta = math.log(N) ** E
    total = 0.0
    count = 0
    for n1 in range(-B, B + 1):
        for n2 in range(-B, B + 1):
            if n1 == 0 and n2 == 0:
                continue
            d_num = n1 * tau.raw - n2 * SCALE
            if 2 * abs(d_num) < SCALE:
                continue
            v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE
            dist_num = min(v, SCALE - v)
            if dist_num == 0:
                continue
            from tridisc._kernels import to_float128
            prod = (max(1, abs(n1)) * to_float128(abs(d_num))
                    * to_float128(dist_num))
            if prod <= theta * (1 - 1e-9):
                total += 1.0 / prod
                count += 1
            elif prod <= theta * (1 + 1e-9):
                pf = Fraction(max(1, abs(n1)) * abs(d_num) * dist_num,
                              SCALE * SCALE)
                if pf <= Fraction(theta):
                    total += 1.0 / float(pf)
                    count += 1
    return total, count


def test_large_term_sum_matches_naive(alpha, golden):
    for n in (4, 8):
        got_s, got_c = large_term_sum(alpha, golden, n, 2.0)
        want_s, want_c = naive_large_term_sum(alpha, golden, n, 2.0,
                                              int(n * n * math.log(n) ** 2))
        assert got_c == want_c
        assert math.isclose(got_s, want_s, rel_tol=1e-11)


def test_large_term_sum_python_fallback_agrees(alpha, golden):
    a = large_term_sum(alpha, golden, 6, 2.0)
    b = large_term_sum(alpha, golden, 6, 2.0, force_python=True)
    assert a == b


def test_large_term_sum_empty_at_tiny_theta():
    # log(2) < 1, so a large exponent drives the threshold to ~0 and the
    # one-pair window holds nothing
    alpha = (preset("sqrt2m1"), preset("sqrt3m1"))
    s, c = large_term_sum(alpha, preset("golden"), 2, 30.0, n_bound=1)
    assert (s, c) == (0.0, 0)


def test_large_term_sum_growth_monitored(alpha, golden):
    # capped frequency window; the threshold (log N)^2 grows with N, the
    # ratio against (log N)^2 phi(log log N) stays bounded (monitored)
    phi = PHI_LINEAR
    ratios = []
    for k in (4, 5, 6, 7, 8, 9, 10):
        n = 1 << k
        s, _ = large_term_sum(alpha, golden, n, 2.0, n_bound=1536)
        ratios.append(s / (math.log(n) ** 2 * phi(math.log(math.log(n)))))
    assert all(r > 0 for r in ratios)
    assert max(ratios) <= 20 * min(ratios)  # boundedness evidence, generous


# ---- Lemma 3.2 ---------------------------------------------------------------


def naive_z_count(alpha, tau, C, box, variant):
    cnt = 0
    c_fr = Fraction(C)
    for n1, n2, _ in naive_box(box, alpha):
        fr = Fraction((n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE, SCALE)
        if fr == 0:
            continue
        d = abs(Fraction(n1 * tau.raw, SCALE) - n2)
        thr = Fraction(1, 2) if d == 0 else min(
            Fraction(1, 2), c_fr / (max(1, abs(n1)) * d))
        lo = fr < thr
        hi = fr > 1 - thr
        if variant == "low" and lo:
            cnt += 1
        elif variant == "high" and hi:
            cnt += 1
        elif variant == "middle" and not lo and not hi:
            cnt += 1
    return cnt


def test_z_count_matches_naive_and_partitions(alpha, golden):
    rng = random.Random(17)
    for _ in range(6):
        v1 = rng.randint(-40, 30)
        w1 = v1 + rng.randint(2, 30)
        v2 = rng.uniform(-6, 0)
        w2 = v2 + rng.uniform(1, 7)
        box = FrequencyBox(v1, w1, v2, w2, golden, True)
        c = float(rng.choice([1, 4, 16]))
        total = 0
        for variant in ("low", "middle", "high"):
            got = z_count(alpha, golden, c, box, variant)
            assert got == naive_z_count(alpha, golden, c, box, variant)
            total += got
        nonzero = sum(
            1 for n1, n2, _ in enumerate_box(box, alpha)
            if (n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE != 0)
        assert total == nonzero


def test_z_count_huge_c_saturates(alpha, golden):
    box = FrequencyBox(1, 31, -3.0, 3.0, golden, True)
    big = z_count(alpha, golden, 1e9, box, "low")
    half = sum(1 for n1, n2, _ in enumerate_box(box, alpha)
               if 0 < 2 * ((n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE)
               < SCALE)
    assert big == half


def test_e_expected_closed_forms(golden):
    # empty box: the d-window misses every integer for n1 = 1
    empty = FrequencyBox(1, 2, 0.1, 0.2, golden, False)
    assert e_expected(golden, 4.0, empty) == 0.0
    # singleton with divisor product 4C: term C/(4C) = 1/4
    tau = FixedUnit.from_decimal("0.5")
    c = 7.875  # m*d = 9 * 3.5 = 31.5 = 4C
    box = FrequencyBox(9, 10, 3.5, 3.6, tau, True)
    pairs = list(enumerate_box(box, (tau, tau)))
    assert len(pairs) == 1 and pairs[0][:2] == (9, 1)
    assert math.isclose(e_expected(tau, c, box), 0.25, rel_tol=1e-12)


def test_e_expected_monotone_and_additive(golden):
    left = FrequencyBox(1, 16, -3.0, 0.0, golden, True)
    right = FrequencyBox(1, 16, 0.0, 3.0, golden, True)
    whole = FrequencyBox(1, 16, -3.0, 3.0, golden, True)
    for c in (1.0, 4.0, 16.0):
        assert math.isclose(
            e_expected(golden, c, left) + e_expected(golden, c, right),
            e_expected(golden, c, whole), rel_tol=1e-12)
    assert e_expected(golden, 2.0, whole) <= e_expected(golden, 8.0, whole)


# ---- Lemma 3.3 ---------------------------------------------------------------


def test_khintchine_degenerate_pair(alpha):
    assert khintchine_solutions(alpha, PHI_LINEAR, 1) == [(1, 1)]


def test_khintchine_solutions_verified_independently(alpha):
    sols = khintchine_solutions(alpha, PHI_LINEAR, 300)
    assert (1, 1) in sols
    solset = set(sols)
    # full exact re-derivation, no screen
    for n1 in range(1, 301):
        for n2 in range(1, 301):
            v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE
            dist = float(Fraction(min(v, SCALE - v), SCALE))
            want = khintchine_lhs(n1, n2, dist, PHI_LINEAR) < 1.0
            assert ((n1, n2) in solset) == want


def test_khintchine_python_screen_agrees(alpha):
    a = khintchine_solutions(alpha, PHI_LINEAR, 120)
    b = khintchine_solutions(alpha, PHI_LINEAR, 120, force_python=True)
    assert a == b


# ---- Lemma 3.4 ---------------------------------------------------------------


def naive_tails(alpha, tau, M):
    from tridisc._kernels import to_float128

    s1 = s2 = 0.0
    for n1 in range(-M, M + 1):
        for n2 in range(-M, M + 1):
            if n1 == 0 and n2 == 0:
                continue
            d_num = n1 * tau.raw - n2 * SCALE
            v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % SCALE
            dist_num = min(v, SCALE - v)
            if dist_num == 0 or d_num == 0:
                continue
            l1 = math.log(abs(n1)) if abs(n1) > 1 else 0.0
            l2 = math.log(abs(n2)) if abs(n2) > 1 else 0.0
            lg = max(1.0, l1, l2) ** 4
            term = 1.0 / (to_float128(dist_num) * lg * max(1, abs(n1))
                          * to_float128(abs(d_num)))
            if n1 != 0 and n2 == nearest_int_scaled(n1 * tau.raw, F):
                s1 += term
            if 2 * abs(d_num) >= SCALE:
                s2 += term
    return s1, s2


def test_tails_match_naive(alpha, golden):
    for m in (2, 5, 16):
        got = tail_sums_S1_S2(alpha, golden, m)
        want = naive_tails(alpha, golden, m)
        assert math.isclose(got[0], want[0], rel_tol=1e-10)
        assert math.isclose(got[1], want[1], rel_tol=1e-10)


def test_tails_monotone_in_m(alpha, golden):
    prev = (0.0, 0.0)
    for m in (8, 16, 32, 64):
        cur = tail_sums_S1_S2(alpha, golden, m)
        assert cur[0] >= prev[0] and cur[1] >= prev[1]
        prev = cur


def test_tails_increments_shrink(alpha, golden):
    values = [tail_sums_S1_S2(alpha, golden, 1 << k) for k in (7, 8, 9, 10)]
    inc1 = [b[0] - a[0] for a, b in zip(values, values[1:])]
    # doubling M: the nearest-slope sum converges, increments shrink
    assert inc1[0] > inc1[-1]


# ---- shells ------------------------------------------------------------------


def test_shell_outside_example(alpha, golden):
    spec = ShellSpec(8, 2.0)
    bound = 8 ** 2 * math.log(8) ** 2
    n1 = int(bound) + 2
    label = shell_classify((n1, 0, nearest_n3(n1, 0, alpha)), alpha, golden, spec)
    assert label == "outside"


def test_shell_slope_near_example(alpha, golden):
    spec = ShellSpec(32, 2.0)
    # n2 = nearest integer to n1 tau, small |n.alpha - n3| needed first
    for n1 in range(1, 200):
        n2 = nearest_int_scaled(n1 * golden.raw, F)
        n3 = nearest_n3(n1, n2, alpha)
        w = n1 * alpha[0].raw + n2 * alpha[1].raw - (n3 << F)
        if 3 * abs(w) < SCALE:
            assert shell_classify((n1, n2, n3), alpha, golden, spec) \
                == "slope_near"
            break
    else:
        pytest.fail("no test vector found")


def test_shell_classify_total_and_consistent(alpha, golden):
    spec = ShellSpec(16, 2.0)
    rng = random.Random(23)
    labels = set()
    for _ in range(10000)[:10000]:
        n1 = rng.randint(-3000, 3000)
        n2 = rng.randint(-3000, 3000)
        if n1 == 0 and n2 == 0:
            continue
        n3 = nearest_n3(n1, n2, alpha) + rng.choice((0, 0, 0, 1, -1))
        lab = shell_classify((n1, n2, n3), alpha, golden, spec)
        lab2 = shell_classify((n1, n2, n3), alpha, golden, spec)
        assert lab == lab2  # pure
        labels.add(lab)
        n = (n1, n2, n3)
        in_u1 = in_shell_set(n, alpha, golden, ShellSpec(16, 2.0, "U1"))
        in_u2 = in_shell_set(n, alpha, golden, ShellSpec(16, 2.0, "U2"))
        in_u4 = in_shell_set(n, alpha, golden, ShellSpec(16, 2.0, "U4"))
        in_u5 = in_shell_set(n, alpha, golden, ShellSpec(16, 2.0, "U5"))
        if lab == "outside":
            assert not in_u1
        elif lab == "n3_far":
            assert in_u1 and not in_u2
        else:
            assert in_u2
        if lab == "small_product":
            assert in_u4
        if lab == "U5":
            assert in_u5
        if in_u5:
            assert lab == "U5"
    assert labels >= {"outside", "n3_far", "slope_near", "small_product"}


# ---- partial quotients and harmonic sum ----------------------------------------


def test_pq_sum_golden_and_sqrt2(golden):
    total, ratio = partial_quotient_sum_test(golden, lambda s: 1.0, 25)
    assert total == 25 and ratio == 1.0
    total2, _ = partial_quotient_sum_test(preset("sqrt2m1"), lambda s: 1.0, 25)
    assert total2 == 50


def test_pq_sum_depth_unavailable():
    with pytest.raises(DepthUnavailable):
        partial_quotient_sum_test(FixedUnit.from_decimal("0.5"),
                                  lambda s: 1.0, 3)


def test_pq_ratio_monitored_for_convergent_phi(golden):
    phi = lambda x: x ** 1.1
    ratios = [partial_quotient_sum_test(golden, lambda s: phi(math.log(s + 1)),
                                        s)[1]
              for s in (5, 10, 20, 40)]
    assert all(r > 0 for r in ratios)


def test_cf_harmonic_closed_form_and_naive(golden):
    assert math.isclose(cf_harmonic_sum(golden, 1),
                        1.0 / (1.0 - float(golden)), rel_tol=1e-12)

    def naive(tau, m):
        total = 0.0
        for n in range(1, m + 1):
            v = (n * tau.raw) % SCALE
            total += 1.0 / (n * float(Fraction(min(v, SCALE - v), SCALE)))
        return total

    for m in (10, 100, 1000):
        assert math.isclose(cf_harmonic_sum(golden, m), naive(golden, m),
                            rel_tol=1e-11)


def test_cf_harmonic_block_growth_tracked(golden):
    # block sums over [q_j, q_{j+1}) against a_{j+1} log q_{j+1}
    cf = cf_expand(golden, 24)
    qs = [q for _, q in cf.convergents]
    cum = {m: cf_harmonic_sum(golden, m) for m in qs}
    for j in range(2, len(qs) - 1):
        block = cum[qs[j + 1]] - cum[qs[j]]
        bound = cf.quotients[j + 1] * max(1.0, math.log(qs[j + 1]))
        assert block <= 25 * bound  # tracked with a generous constant
