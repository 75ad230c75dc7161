"""Frequency-set enumeration and the counting quantities of the local lemmas.

Covers the far-divisor sum over the large-term set, solution counts of the
fractional inequality against their expected values, the Khintchine linear
form search, the two-part tail sums, shell classification of frequencies,
partial-quotient sums and the harmonic small-divisor sum.

Set-membership comparisons against dyadic quantities (1/2, 1/3 via integer
cross-multiplication) are exact; thresholds of the form (log N)^E are
transcendental and are fixed as their float64 values, with borderline cases
adjudicated exactly against that float threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from . import _kernels
from .arithmetic import FixedUnit, cf_expand, nearest_int_scaled


class RangeTooLarge(ValueError):
    pass


class DepthUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyBox:
    """Lattice box v1 <= n1 < w1, v2 <= n1 tau - n2 < w2, optionally
    restricted to far divisors |n1 tau - n2| >= 1/2."""

    v1: float
    w1: float
    v2: float
    w2: float
    tau: FixedUnit
    require_far: bool = True

    def __post_init__(self) -> None:
        if not (self.v1 < self.w1 and self.v2 < self.w2):
            raise ValueError("need v1 < w1 and v2 < w2")


@dataclass(frozen=True)
class ShellSpec:
    """Thresholds for the shell decomposition; exponent_e is the desk-scale
    stand-in for the paper-scale exponent (default 2)."""

    N: int
    exponent_e: float = 2.0
    mode: str = "U"

    def __post_init__(self) -> None:
        if self.exponent_e <= 0:
            raise ValueError("exponent must be positive")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.mode not in {"U", "U1", "U2", "U3", "U4", "U5"}:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class PhiFunction:
    """A positive increasing weight function with a declared convergence
    class for sum 1/phi(n) (verified numerically, never proved)."""

    name: str
    fn: Callable[[float], float]
    series_convergent: bool

    def __call__(self, x: float) -> float:
        return self.fn(x)


def _is_far(d_num: int, scale: int) -> bool:
    """|d_num / scale| >= 1/2, exactly."""
    return 2 * abs(d_num) >= scale


def enumerate_box(box: FrequencyBox,
                  alpha: tuple[FixedUnit, FixedUnit]
                  ) -> Iterator[tuple[int, int, int]]:
    """Stream (n1, n2, n3=nearest) of the box; n2 by direct floor
    arithmetic on the exact slope rational, no scanning."""
    if box.w1 - box.v1 > 1e9:
        raise RangeTooLarge("n1 range exceeds 1e9")
    f = box.tau.f
    scale = 1 << f
    v2, w2 = Fraction(box.v2), Fraction(box.w2)
    r1, r2 = alpha[0].raw, alpha[1].raw
    for n1 in range(math.ceil(box.v1), math.ceil(box.w1)):
        t = Fraction(n1 * box.tau.raw, scale)
        n2_lo = math.floor(t - w2) + 1
        n2_hi = math.floor(t - v2)
        for n2 in range(n2_lo, n2_hi + 1):
            if box.require_far and not _is_far(n1 * box.tau.raw - n2 * scale, scale):
                continue
            n3 = nearest_int_scaled(n1 * r1 + n2 * r2, f)
            yield n1, n2, n3


# ---- Lemma 3.1: sum over the large-term set --------------------------------


def large_term_bound(N: int) -> int:
    """Default frequency bound N^2 (log N)^2 (natural log)."""
    return int(N * N * math.log(N) ** 2)


def large_term_sum(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit,
                   N: int, E: float, n_bound: int | None = None,
                   force_python: bool = False) -> tuple[float, int]:
    """Sum of 1/(max{1,|n1|} |n1 tau - n2| ||n alpha||) over the far set
    with product threshold (log N)^E, plus the count of contributing pairs.

    n_bound caps the frequency range (defaults to N^2 (log N)^2); the cap
    keeps desk-scale growth scans enumerable.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    B = n_bound if n_bound is not None else large_term_bound(N)
    theta = math.log(N) ** E
    theta_fr = Fraction(theta)
    f = alpha[0].f
    scale = 1 << f
    r1, r2 = alpha[0].raw, alpha[1].raw
    tr = tau.raw

    total = 0.0
    count = 0
    # n1 = 0 line: divisor |n2| >= 1/2 means n2 != 0
    for n2 in range(1, B + 1):
        for sgn in (1, -1):
            v = (sgn * n2 * r2) % scale
            d = min(v, scale - v)
            if d == 0:
                continue
            prod = n2 * _kernels.to_float128(d << (128 - f))
            if prod <= theta:
                total += 1.0 / prod
                count += 1
    # n1 != 0: the set is symmetric under n -> -n, so sweep n1 >= 1, double
    half_total = 0.0
    half_count = 0
    borders: list[tuple[int, int]] = []
    for n1 in range(1, B + 1):
        tip, tf = divmod(n1 * tr, scale)
        v0 = (n1 * r1 - B * r2) % scale
        if f != 128:
            tf <<= 128 - f
            v0 <<= 128 - f
            r2k = r2 << (128 - f)
        else:
            r2k = r2
        s, c, b = _kernels.far_row(v0, r2k, n1, tip, tf, -B, B,
                                   theta=theta, mode=0,
                                   force_python=force_python)
        half_total += s
        half_count += c
        borders.extend(b)
    for n1, n2 in borders:
        d_num = abs(n1 * tr - n2 * scale)
        v = (n1 * r1 + n2 * r2) % scale
        dist_num = min(v, scale - v)
        if dist_num == 0:
            continue
        prod_fr = Fraction(max(1, abs(n1)) * d_num * dist_num, scale * scale)
        if prod_fr <= theta_fr:
            half_total += 1.0 / float(prod_fr)
            half_count += 1
    return total + 2.0 * half_total, count + 2 * half_count


# ---- Lemma 3.2: solution counts vs expected values --------------------------


def _box_pairs(box: FrequencyBox) -> Iterator[tuple[int, int, int]]:
    """(n1, n2, d_num) of the box with d_num = n1 tau_raw - n2 2^f."""
    if box.w1 - box.v1 > 1e9:
        raise RangeTooLarge("n1 range exceeds 1e9")
    scale = 1 << box.tau.f
    v2, w2 = Fraction(box.v2), Fraction(box.w2)
    for n1 in range(math.ceil(box.v1), math.ceil(box.w1)):
        t = Fraction(n1 * box.tau.raw, scale)
        n2_lo = math.floor(t - w2) + 1
        n2_hi = math.floor(t - v2)
        for n2 in range(n2_lo, n2_hi + 1):
            d_num = n1 * box.tau.raw - n2 * scale
            if box.require_far and not _is_far(d_num, scale):
                continue
            yield n1, n2, d_num


def z_count(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit, C: float,
            box: FrequencyBox, variant: str = "low") -> int:
    """Exact count of box members with 0 < {n.alpha} < min(1/2, C/(m d))
    (variant "low"); "high" counts the mirrored band at 1, "middle" the
    closed band between them.  The three variants partition the box members
    with {n.alpha} != 0.
    """
    if C < 1:
        raise ValueError("C must be >= 1")
    if variant not in {"low", "middle", "high"}:
        raise ValueError("variant must be low, middle or high")
    if box.tau.f != alpha[0].f:
        raise ValueError("mixed precisions")
    f = alpha[0].f
    scale = 1 << f
    c_fr = Fraction(C)
    r1, r2 = alpha[0].raw, alpha[1].raw
    count = 0
    for n1, n2, d_num in _box_pairs(box):
        frac = (n1 * r1 + n2 * r2) % scale
        if frac == 0:
            continue
        m = max(1, abs(n1))
        d_abs = abs(d_num)

        def below(g: int) -> bool:
            # g/scale < min(1/2, C/(m * d_abs/scale)), exactly
            if 2 * g >= scale:
                return False
            if d_abs == 0:
                return True
            return Fraction(g * m * d_abs, scale * scale) < c_fr

        lo = below(frac)
        hi = below(scale - frac)
        if variant == "low" and lo:
            count += 1
        elif variant == "high" and hi:
            count += 1
        elif variant == "middle" and not lo and not hi:
            count += 1
    return count


def e_expected(tau: FixedUnit, C: float, box: FrequencyBox) -> float:
    """Expected solution count: sum over the box of min(1/2, C/(m d));
    the ambiguous index in the divisor is read as n1."""
    if C < 1:
        raise ValueError("C must be >= 1")
    scale = 1 << tau.f
    total = 0.0
    for n1, _n2, d_num in _box_pairs(box):
        m = max(1, abs(n1))
        d_abs = abs(d_num)
        if d_abs == 0:
            total += 0.5
        else:
            total += min(0.5, C * scale / (m * float(d_abs)))
    return total


# ---- Lemma 3.3: Khintchine linear-form solutions -----------------------------


def khintchine_lhs(n1: int, n2: int, dist: float, phi: PhiFunction) -> float:
    """n1 n2 (log n1 n2)^2 phi(log log (n1^2 n2^2)) ||n alpha||; the
    (log 1)^2 = 0 factor makes the value 0 at n1 = n2 = 1 regardless of
    the (then-undefined) phi argument."""
    t = n1 * n2
    if t == 1:
        return 0.0
    lt = math.log(t)
    return t * lt * lt * phi(math.log(2.0 * lt)) * dist


def khintchine_solutions(alpha: tuple[FixedUnit, FixedUnit],
                         phi: PhiFunction, bound: int,
                         force_python: bool = False) -> list[tuple[int, int]]:
    """All strictly positive n in [1,bound]^2 with
    n1 n2 (log(n1 n2))^2 phi(loglog(n1^2 n2^2)) ||n alpha|| < 1.

    A compiled screen collects a provable superset (distance lower bound
    times n1 n2 below a conservative constant); each candidate is then
    decided exactly.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    f = alpha[0].f
    scale = 1 << f
    r1 = alpha[0].raw << (128 - f)
    r2 = alpha[1].raw << (128 - f)
    # screen constant: 1/((log t)^2 phi(log 2 log t)) is decreasing in t,
    # so its supremum over t >= 2 sits at t = 2
    lt2 = math.log(2.0)
    cmax = max(1.0, 1.1 / (lt2 * lt2 * phi(math.log(2.0 * lt2))))
    cands = _kernels.khintchine_screen(r1, r2, bound, cmax=cmax,
                                       force_python=force_python)
    out = []
    for n1, n2 in cands:
        v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % scale
        d = min(v, scale - v)
        dist = _kernels.to_float128(d << (128 - f))
        if khintchine_lhs(n1, n2, dist, phi) < 1.0:
            out.append((n1, n2))
    out.sort()
    return out


# ---- Lemma 3.4: two-part tail sums ------------------------------------------


def _log_factor(n1: int, n2: int) -> float:
    l1 = math.log(abs(n1)) if abs(n1) > 1 else 0.0
    l2 = math.log(abs(n2)) if abs(n2) > 1 else 0.0
    return max(1.0, l1, l2) ** 4


def tail_sums_S1_S2(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit,
                    M: int, force_python: bool = False) -> tuple[float, float]:
    """Partial sums over max(|n1|,|n2|) <= M of the two-part tail:
    S1 over n2 = nearest integer to n1 tau (n1 != 0), S2 over the far set
    |n1 tau - n2| >= 1/2, both with the quartic log factor."""
    if M < 2:
        raise ValueError("M must be >= 2")
    f = alpha[0].f
    scale = 1 << f
    r1, r2 = alpha[0].raw, alpha[1].raw
    tr = tau.raw

    s1 = 0.0
    for n1 in range(1, M + 1):
        n2 = nearest_int_scaled(n1 * tr, f)
        if abs(n2) > M:
            continue
        d_num = abs(n1 * tr - n2 * scale)
        if d_num == 0:
            continue
        v = (n1 * r1 + n2 * r2) % scale
        dist_num = min(v, scale - v)
        if dist_num == 0:
            continue
        dist = _kernels.to_float128(dist_num << (128 - f))
        d = _kernels.to_float128(d_num << (128 - f))
        s1 += 1.0 / (dist * _log_factor(n1, n2) * max(1, n1) * d)
    s1 *= 2.0  # n -> -n symmetry

    s2 = 0.0
    for n2 in range(1, M + 1):  # n1 = 0 line, |n2| >= 1/2 always
        v = (n2 * r2) % scale
        for frac in (v, (scale - v) % scale):  # +-n2
            if frac == 0:
                continue
            dist = _kernels.to_float128(min(frac, scale - frac) << (128 - f))
            s2 += 1.0 / (dist * _log_factor(0, n2) * 1.0 * n2)
    half = 0.0
    for n1 in range(1, M + 1):
        tip, tf = divmod(n1 * tr, scale)
        v0 = (n1 * r1 - M * r2) % scale
        if f != 128:
            tf <<= 128 - f
            v0 <<= 128 - f
            r2k = r2 << (128 - f)
        else:
            r2k = r2
        s, _c, _b = _kernels.far_row(v0, r2k, n1, tip, tf, -M, M,
                                     mode=1, force_python=force_python)
        half += s
    return s1, s2 + 2.0 * half


# ---- shell classification ---------------------------------------------------


SHELL_LABELS = ("outside", "n3_far", "slope_near", "small_product",
                "mid_range", "U5")


def shell_classify(n: tuple[int, int, int], alpha: tuple[FixedUnit, FixedUnit],
                   tau: FixedUnit, spec: ShellSpec) -> str:
    """Disjoint shell label of a frequency under the successive
    restrictions (first match wins):

    outside        max(|n1|,|n2|) beyond N^2 (log N)^2
    n3_far         |n.alpha - n3| >= 1/3
    slope_near     |n1 tau - n2| < 1/2 (n2 is the nearest integer to n1 tau)
    small_product  max{1,|n1|} |n1 tau - n2| ||n.alpha|| < (log N)^E
    mid_range      outside the final window: max(|n1|, |n1 tau - n2|)
                   > N^2/4 or min below (log N)^E
    U5             the remaining big-product window
    """
    n1, n2, n3 = n
    f = alpha[0].f
    scale = 1 << f
    bound1 = spec.N ** 2 * math.log(spec.N) ** 2
    if max(abs(n1), abs(n2)) > bound1:
        return "outside"
    w_num = n1 * alpha[0].raw + n2 * alpha[1].raw - (n3 << f)
    if 3 * abs(w_num) >= scale:
        return "n3_far"
    d_num = n1 * tau.raw - n2 * scale
    if 2 * abs(d_num) < scale:
        return "slope_near"
    theta = math.log(spec.N) ** spec.exponent_e
    d = _kernels.to_float128(abs(d_num) << (128 - f))
    dist = _kernels.to_float128(abs(w_num) << (128 - f))
    prod = max(1, abs(n1)) * d * dist
    if prod < theta:
        return "small_product"
    if max(abs(n1), d) > spec.N ** 2 / 4.0 or min(abs(n1), d) < theta:
        return "mid_range"
    return "U5"


def in_shell_set(n: tuple[int, int, int], alpha: tuple[FixedUnit, FixedUnit],
                 tau: FixedUnit, spec: ShellSpec) -> bool:
    """Membership in the cumulative set named by spec.mode (the paper's
    nested families, with absolute values where the text omits them)."""
    n1, n2, n3 = n
    f = alpha[0].f
    scale = 1 << f
    bound1 = spec.N ** 2 * math.log(spec.N) ** 2
    theta = math.log(spec.N) ** spec.exponent_e
    w_num = n1 * alpha[0].raw + n2 * alpha[1].raw - (n3 << f)
    d_num = n1 * tau.raw - n2 * scale
    d = _kernels.to_float128(abs(d_num) << (128 - f))
    dist_w = _kernels.to_float128(abs(w_num) << (128 - f))
    in_u1 = max(abs(n1), abs(n2)) <= bound1 and (n1, n2, n3) != (0, 0, 0)
    if spec.mode == "U1":
        return in_u1
    if spec.mode == "U":
        v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % scale
        dist = _kernels.to_float128(min(v, scale - v) << (128 - f))
        return (in_u1 and _is_far(d_num, scale)
                and max(1, abs(n1)) * d * dist <= theta)
    in_u2 = in_u1 and 3 * abs(w_num) < scale
    if spec.mode == "U2":
        return in_u2
    if spec.mode == "U3":
        return in_u2 and 2 * abs(d_num) <= scale
    nearest = 2 * abs(w_num) <= scale
    if spec.mode == "U4":
        return (in_u1 and nearest and _is_far(d_num, scale)
                and max(1, abs(n1)) * d * dist_w < theta)
    # U5
    return ((n1, n2, n3) != (0, 0, 0) and nearest and _is_far(d_num, scale)
            and max(abs(n1), d) <= spec.N ** 2 / 4.0
            and min(abs(n1), d) >= theta
            and max(1, abs(n1)) * d * dist_w > theta)


# ---- partial quotients and the harmonic small-divisor sum -------------------


def partial_quotient_sum_test(tau: FixedUnit, psi: Callable[[float], float],
                              s: int) -> tuple[int, float]:
    """(a_1 + ... + a_s, sum / (s psi(s))) for the partial quotients of tau."""
    cf = cf_expand(tau, s)
    if len(cf.quotients) < s:
        raise DepthUnavailable(
            f"continued fraction terminates after {len(cf.quotients)} quotients")
    total = sum(cf.quotients[:s])
    return total, total / (s * psi(s))


def cf_harmonic_sum(tau: FixedUnit, M: int, force_python: bool = False) -> float:
    """sum_{n=1..M} 1/(n ||n tau||), exact fixed-point distances."""
    if M < 1:
        raise ValueError("M must be >= 1")
    raw = tau.raw << (128 - tau.f)
    return _kernels.cf_harmonic_kernel(raw, M, force_python=force_python)
