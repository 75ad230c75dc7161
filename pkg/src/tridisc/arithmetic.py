"""Exact unit-interval fixed-point arithmetic and continued fractions.

Numbers in [0,1) are stored as unsigned integers with ``f`` fractional bits
(default 128), so orbit arithmetic mod 1 is exact integer arithmetic mod 2^f.
Irrational inputs are ingested once (from a decimal string, a rational, or a
list of partial quotients) and rounded half-to-even to the nearest
representable value; everything downstream treats that value as ground truth.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

DEFAULT_F = 128
MIN_F = 96


class ZeroInput(ValueError):
    """Raised when an operation requires a nonzero unit-interval value."""


def _round_half_even(fr: Fraction) -> int:
    q, r = divmod(fr.numerator, fr.denominator)
    twice = 2 * r
    if twice > fr.denominator or (twice == fr.denominator and q % 2 == 1):
        q += 1
    return q


@dataclass(frozen=True)
class FixedUnit:
    """A point of [0,1): ``raw / 2**f`` with 0 <= raw < 2**f."""

    raw: int
    f: int = DEFAULT_F

    def __post_init__(self) -> None:
        if self.f < MIN_F:
            raise ValueError(f"f={self.f} below minimum {MIN_F}")
        if not 0 <= self.raw < (1 << self.f):
            raise ValueError("raw out of range [0, 2^f)")

    # ---- constructors -------------------------------------------------

    @classmethod
    def from_fraction(cls, fr: Fraction, f: int = DEFAULT_F) -> "FixedUnit":
        raw = _round_half_even(fr * (1 << f)) % (1 << f)
        return cls(raw, f)

    @classmethod
    def from_decimal(cls, text: str, f: int = DEFAULT_F) -> "FixedUnit":
        """Parse a decimal string in [0,1); the single rounding point."""
        return cls.from_fraction(Fraction(text), f)

    @classmethod
    def from_float(cls, x: float, f: int = DEFAULT_F) -> "FixedUnit":
        if not 0.0 <= x < 1.0:
            raise ValueError("float input must lie in [0,1)")
        return cls.from_fraction(Fraction(x), f)

    @classmethod
    def from_cf_quotients(cls, quotients: Sequence[int], f: int = DEFAULT_F) -> "FixedUnit":
        """Value of [0; a1, a2, ...] rounded once to f bits."""
        if not quotients or any(a < 1 for a in quotients):
            raise ValueError("quotients must be a nonempty list of positive integers")
        fr = Fraction(0)
        for a in reversed(list(quotients)):
            fr = Fraction(1, a + fr)
        return cls.from_fraction(fr, f)

    # ---- views ---------------------------------------------------------

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.raw, 1 << self.f)

    def __float__(self) -> float:
        # exact two-part conversion, accurate for raw near 0 and near 2^f
        hi, lo = divmod(self.raw, 1 << 64)
        return float(hi) * 2.0 ** (64 - self.f) + float(lo) * 2.0 ** (-self.f)

    def centered(self) -> int:
        """Signed numerator of the representative in [-1/2, 1/2)."""
        half = 1 << (self.f - 1)
        return self.raw if self.raw < half else self.raw - (1 << self.f)

    # ---- serialization -------------------------------------------------

    def to_str(self) -> str:
        return f"f={self.f}:raw={self.raw:#x}"

    @classmethod
    def parse(cls, text: str) -> "FixedUnit":
        m = re.fullmatch(r"f=(\d+):raw=0x([0-9a-f]+)", text.strip())
        if not m:
            raise ValueError(f"not a FixedUnit string: {text!r}")
        return cls(int(m.group(2), 16), int(m.group(1)))


#: 50-digit decimal expansions used by the CLI presets; 50 digits determine
#: the nearest 128-bit value unambiguously.
PRESETS = {
    "sqrt2m1": "0.41421356237309504880168872420969807856967187537694",
    "sqrt3m1": "0.73205080756887729352744634150587236694280525381038",
    "golden": "0.61803398874989484820458683436563811772030917980576",
}


def preset(name: str, f: int = DEFAULT_F) -> FixedUnit:
    return FixedUnit.from_decimal(PRESETS[name], f)


# ---- modular operations -----------------------------------------------


def _check_same_f(u: FixedUnit, v: FixedUnit) -> None:
    if u.f != v.f:
        raise ValueError("mixed fixed-point precisions")


def add_mod1(u: FixedUnit, v: FixedUnit) -> FixedUnit:
    _check_same_f(u, v)
    return FixedUnit((u.raw + v.raw) & ((1 << u.f) - 1), u.f)


def mul_int_mod1(n: int, u: FixedUnit) -> FixedUnit:
    """n*u mod 1 by wide multiplication (exactly the n-fold add_mod1)."""
    return FixedUnit((n * u.raw) % (1 << u.f), u.f)


def dist_nearest_int(u: FixedUnit) -> FixedUnit:
    """||u||: distance to the nearest integer, in [0, 1/2]."""
    return FixedUnit(min(u.raw, (1 << u.f) - u.raw) if u.raw else 0, u.f)


def nearest_int(n: int, u: FixedUnit) -> int:
    """Nearest integer to n + u; ties at exactly 1/2 go to the even integer."""
    half = 1 << (u.f - 1)
    if u.raw < half:
        return n
    if u.raw > half:
        return n + 1
    return n if n % 2 == 0 else n + 1


def signed_frac_parts(num: int, f: int) -> tuple[int, int]:
    """Split an exact scaled real num/2^f into (floor, fractional raw)."""
    return num >> f, num & ((1 << f) - 1)


def nearest_int_scaled(num: int, f: int) -> int:
    """Nearest integer to num/2^f (half-to-even), num any signed integer."""
    fl, frac = signed_frac_parts(num, f)
    return nearest_int(fl, FixedUnit(frac, f))


# ---- continued fractions ----------------------------------------------


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients and convergents of a unit-interval value.

    ``exact`` is True when the Euclidean expansion of the fixed-point
    rational terminated before the requested depth, i.e. the last
    convergent reproduces the value exactly.
    """

    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    exact: bool


def cf_expand(u: FixedUnit, depth: int) -> ContinuedFraction:
    """Euclidean-algorithm expansion of u = raw/2^f to ``depth`` quotients."""
    if u.raw == 0:
        raise ZeroInput("cannot expand 0")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    num, den = u.raw, 1 << u.f  # value = num/den in (0,1)
    quotients: list[int] = []
    convergents: list[tuple[int, int]] = []
    p_prev, p_cur = 1, 0  # p_{-1}, p_0 for [0; a1, a2, ...]
    q_prev, q_cur = 0, 1
    exact = False
    while len(quotients) < depth:
        a, r = divmod(den, num)
        quotients.append(a)
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        convergents.append((p_cur, q_cur))
        den, num = num, r
        if num == 0:
            exact = True
            break
    return ContinuedFraction(tuple(quotients), tuple(convergents), exact)


def convergent_gap_check(cf: ContinuedFraction, u: FixedUnit) -> list[bool]:
    """Check 1/(2 q_{j+1}) <= ||q_j u|| <= 1/q_{j+1} for each convergent.

    The final convergent has no successor: when the expansion terminated
    exactly it is checked for ||q_s u|| == 0, otherwise it is excluded
    (fixed-point truncation dominates past that point).
    """
    out: list[bool] = []
    s = len(cf.convergents)
    scale = 1 << u.f
    for j in range(s):
        qj = cf.convergents[j][1]
        d = dist_nearest_int(mul_int_mod1(qj, u)).raw
        if j + 1 < s:
            qn = cf.convergents[j + 1][1]
            out.append(scale <= 2 * qn * d and qn * d <= scale)
        elif cf.exact:
            out.append(d == 0)
    return out
