"""Fourier evaluation of the Fejer-averaged triangle discrepancy.

The averaged discrepancy expands over integer frequencies (n1, n2, n3) into
two families of products (a box-like part and a hypotenuse part with the
shifted divisor n1*(n1*tau - n2)), each damped by squared-sinc weights that
make the series absolutely summable.  This module evaluates single terms, the
truncated double sum (with the n3 ladder summed exactly: a window of seven
values around the nearest integer plus a closed-form fold of the cubic-decay
tail), and an independent direct-counting oracle that integrates the orbit
average without any Fourier machinery.

Frequencies with n1 = 0 or n2 = 0, and the resonance n1*tau = n2, are the
analytic limits of the generic term; they are included explicitly since the
oracle comparison fails at small N without them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arithmetic import FixedUnit, nearest_int_scaled
from .orbit import DiscrepancyTrace, OrbitSpec, Triangle, discrepancy

TWO_PI = 2.0 * math.pi
#: i^3 / (2 pi)^3, the global prefactor of both term families
PREF = -1j / (2.0 * math.pi) ** 3


class ResidualError(ArithmeticError):
    """Imaginary residual of the truncated sum exceeded its bound."""


class EmptyBox(ValueError):
    pass


@dataclass(frozen=True)
class Frequency:
    n1: int
    n2: int
    n3: int

    def __post_init__(self) -> None:
        if self.n1 == 0 and self.n2 == 0 and self.n3 == 0:
            raise ValueError("frequency (0,0,0) is excluded")


@dataclass(frozen=True)
class SpectralParams:
    x: Triangle
    a: tuple[FixedUnit, FixedUnit]
    alpha: tuple[FixedUnit, FixedUnit]
    N: int
    cutoff: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")

    @property
    def f(self) -> int:
        return self.alpha[0].f


@dataclass(frozen=True)
class LinearFormSelector:
    """(d1, d2, d3) in {0,1}^3 with d1 + d2 = 1: one of the 4 linear forms."""

    d1: int
    d2: int
    d3: int

    def __post_init__(self) -> None:
        if {self.d1, self.d2, self.d3} - {0, 1} or self.d1 + self.d2 != 1:
            raise ValueError("selector must be binary with d1 + d2 = 1")


ALL_SELECTORS = (
    LinearFormSelector(1, 0, 0),
    LinearFormSelector(1, 0, 1),
    LinearFormSelector(0, 1, 0),
    LinearFormSelector(0, 1, 1),
)


# ---- elementary weights -----------------------------------------------------


def fejer_weight(k: float, N: int) -> float:
    """Squared sinc (sin(2 pi k / N^2) / (2 pi k / N^2))^2; 1 at k = 0."""
    if k == 0:
        return 1.0
    y = TWO_PI * k / float(N * N)
    return (math.sin(y) / y) ** 2


def _sinc2(y: float) -> float:
    """(sin(2 pi y)/(2 pi y))^2 with the y=0 limit."""
    if y == 0.0:
        return 1.0
    t = TWO_PI * y
    return (math.sin(t) / t) ** 2


def omega_exact(n1: int, n2: int, n3: int,
                alpha: tuple[FixedUnit, FixedUnit]) -> tuple[int, int]:
    """Exact numerator of n.alpha - n3 over 2^f, and f."""
    f = alpha[0].f
    t = n1 * alpha[0].raw + n2 * alpha[1].raw
    return t - (n3 << f), f


def nearest_n3(n1: int, n2: int, alpha: tuple[FixedUnit, FixedUnit]) -> int:
    """Nearest integer to n1 a1 + n2 a2 (ties half-to-even)."""
    f = alpha[0].f
    return nearest_int_scaled(n1 * alpha[0].raw + n2 * alpha[1].raw, f)


def scaled_to_float(num: int, f: int) -> float:
    """Canonical float of num/2^f for signed num, accurate near zero.

    The two halves are combined on the magnitude (both parts nonnegative),
    never across a sign change, so tiny values keep full relative precision.
    """
    if num < 0:
        return -scaled_to_float(-num, f)
    hi, lo = num >> 64, num & 0xFFFFFFFFFFFFFFFF
    return float(hi) * 2.0 ** (64 - f) + float(lo) * 2.0 ** (-f)


def e_unit(k: int, raw: int, f: int) -> complex:
    """exp(2 pi i k raw / 2^f) with the phase reduced mod 1 exactly first,
    so integer phases give exactly 1 and huge k keeps full precision."""
    frac = (k * raw) % (1 << f)
    if frac == 0:
        return 1.0 + 0.0j
    num = frac if frac < (1 << (f - 1)) else frac - (1 << f)
    return cmath.exp(2j * math.pi * scaled_to_float(num, f))


def is_small_divisor(n1: int, n2: int, n3: int,
                     alpha: tuple[FixedUnit, FixedUnit]) -> bool:
    """True when |n.alpha - n3| < 2^(-f/2): fixed point can no longer
    resolve the divisor reliably (reported as a flag, never an error)."""
    num, f = omega_exact(n1, n2, n3, alpha)
    return abs(num) < (1 << (f - f // 2))


def g_damping(n: Frequency, alpha: tuple[FixedUnit, FixedUnit], N: int) -> float:
    """Product of the three squared sincs; always inside [0,1]."""
    num, f = omega_exact(n.n1, n.n2, n.n3, alpha)
    g = (fejer_weight(n.n1, N) * fejer_weight(n.n2, N)
         * _sinc2(scaled_to_float(num, f)))
    assert 0.0 <= g <= 1.0 + 1e-12
    return g


# ---- single terms -----------------------------------------------------------


def _window_factor(w0: float, N: int) -> complex:
    """(e^{-2 pi i w N} - 1)/w, stably: -2 sin^2(pi N w) - i sin(2 pi N w)."""
    ewm1 = complex(-2.0 * math.sin(math.pi * N * w0) ** 2,
                   -math.sin(TWO_PI * N * w0))
    if w0 == 0.0:
        return complex(0.0, -TWO_PI * N)
    return ewm1 / w0


def _chord_ratio(delta_num: int, f: int) -> complex:
    """(e^{2 pi i delta} - 1)/delta at delta = delta_num/2^f, computed from
    the exact numerator so near-resonances keep full relative precision and
    integer delta gives exactly zero; the delta = 0 limit is 2 pi i.
    |value| <= 2 pi always (chord <= arc)."""
    if delta_num == 0:
        return complex(0.0, TWO_PI)
    scale = 1 << f
    red = delta_num % scale
    if 2 * red >= scale:
        red -= scale
    if red == 0:
        return 0j
    delta = scaled_to_float(delta_num, f)
    dr = scaled_to_float(red, f)
    s = math.sin(math.pi * dr)
    return complex(-2.0 * s * s, math.sin(TWO_PI * dr)) / delta


def f1_term(n: Frequency, p: SpectralParams) -> complex:
    """Box-family term with divisor n1*n2 (requires n1 != 0, n2 != 0)."""
    if n.n1 == 0 or n.n2 == 0:
        raise ValueError("f1_term requires n1 != 0 and n2 != 0")
    num, f = omega_exact(n.n1, n.n2, n.n3, p.alpha)
    w0 = scaled_to_float(num, f)
    e2 = e_unit(n.n2, p.x.x2_raw, p.x.f)
    phase = _phase(n.n1, n.n2, p)
    weights = (fejer_weight(n.n1, p.N) * fejer_weight(n.n2, p.N) * _sinc2(w0))
    return PREF * phase * (1.0 - e2) / (n.n1 * n.n2) * _window_factor(w0, p.N) * weights


def f2_term(n: Frequency, p: SpectralParams) -> complex:
    """Hypotenuse-family term with divisor n1*(n1 tau - n2).

    Requires n1 != 0 and n1 tau != n2 (decided exactly on the leg rationals).
    The chord factor is evaluated as x2 e(n2 x2) (e^{2 pi i d}-1)/d with
    d = n1 x1 - n2 x2 taken from the exact integer numerator, which keeps
    full precision arbitrarily close to the resonance; debug builds assert
    the chord/arc bound |(e^{2 pi i d}-1)/d| <= 2 pi.
    """
    if n.n1 == 0:
        raise ValueError("f2_term requires n1 != 0")
    dnum = n.n1 * p.x.x1_raw - n.n2 * p.x.x2_raw
    if dnum == 0:
        raise ValueError("f2_term requires n1 tau != n2")
    num, f = omega_exact(n.n1, n.n2, n.n3, p.alpha)
    w0 = scaled_to_float(num, f)
    x2f = scaled_to_float(p.x.x2_raw, p.x.f)
    e2 = e_unit(n.n2, p.x.x2_raw, p.x.f)
    chord = _chord_ratio(dnum, p.x.f)
    assert abs(chord) <= TWO_PI * (1 + 1e-12)
    phase = _phase(n.n1, n.n2, p)
    weights = (fejer_weight(n.n1, p.N) * fejer_weight(n.n2, p.N) * _sinc2(w0))
    return PREF * phase * x2f * e2 * chord / n.n1 * _window_factor(w0, p.N) * weights


def _phase(n1: int, n2: int, p: SpectralParams) -> complex:
    if p.a[0].raw == 0 and p.a[1].raw == 0:
        return 1.0 + 0.0j
    return e_unit(-1, (n1 * p.a[0].raw + n2 * p.a[1].raw) % (1 << p.f), p.f)


def _bracket(n1: int, n2: int, p: SpectralParams) -> complex:
    """Combined numerator/divisor bracket, with the analytic limits at
    n1 = 0, n2 = 0 and n1 tau = n2 folded in."""
    x1f = scaled_to_float(p.x.x1_raw, p.x.f)
    x2f = scaled_to_float(p.x.x2_raw, p.x.f)
    tauf = p.x.x1_raw / p.x.x2_raw
    if n1 == 0 and n2 == 0:
        return 0j
    if n1 == 0:
        e2 = e_unit(n2, p.x.x2_raw, p.x.f)
        return tauf * (e2 - 1.0) / (n2 * n2) - 2j * math.pi * x1f / n2
    if n2 == 0:
        e1 = e_unit(n1, p.x.x1_raw, p.x.f)
        return -2j * math.pi * x2f / n1 + (e1 - 1.0) / (tauf * n1 * n1)
    e2 = e_unit(n2, p.x.x2_raw, p.x.f)
    dnum = n1 * p.x.x1_raw - n2 * p.x.x2_raw
    return (1.0 - e2) / (n1 * n2) \
        + x2f * e2 * _chord_ratio(dnum, p.x.f) / n1


def term_total(n1: int, n2: int, n3: int, p: SpectralParams) -> complex:
    """Full averaged-series term for one (n1, n2, n3), degenerate cases
    evaluated by their limits; exactly zero when n1 = n2 = 0."""
    if n1 == 0 and n2 == 0:
        return 0j
    num, f = omega_exact(n1, n2, n3, p.alpha)
    w0 = scaled_to_float(num, f)
    weights = (fejer_weight(n1, p.N) * fejer_weight(n2, p.N) * _sinc2(w0))
    return (PREF * _phase(n1, n2, p) * _bracket(n1, n2, p)
            * _window_factor(w0, p.N) * weights)


# ---- exact fold of the n3 ladder -------------------------------------------
#
# For fixed (n1, n2) and integer N, every factor of the term except 1/w^3 is
# the same for all n3 (sin(2 pi w) and e^{-2 pi i w N} are 1-periodic), so
# the sum over n3 outside the +-3 window equals a pure cubic tail
# sum_{|k|>=4} (w0-k)^{-3}, evaluated in closed form.

_S_CONSTS = tuple(
    z - 1.0 - 2.0 ** -m - 3.0 ** -m
    for m, z in (
        (4, math.pi ** 4 / 90),
        (6, math.pi ** 6 / 945),
        (8, math.pi ** 8 / 9450),
        (10, math.pi ** 10 / 93555),
        (12, 691 * math.pi ** 12 / 638512875),
        (14, 2 * math.pi ** 14 / 18243225),
    )
)
_BINOMS = (3.0, 10.0, 21.0, 36.0, 55.0, 78.0)


def w3_cubic_tail(w: float) -> float:
    """sum over |k| >= 4 of (w - k)^-3, for |w| <= 1/2."""
    if abs(w) <= 0.25:
        acc = 0.0
        wp = w
        for b, s in zip(_BINOMS, _S_CONSTS):
            acc += b * wp * s
            wp *= w * w
        return -2.0 * acc
    closed = math.pi ** 3 * math.cos(math.pi * w) / math.sin(math.pi * w) ** 3
    window = sum((w - k) ** -3 for k in range(-3, 4))
    return closed - window


def _w3_cubic_tail_vec(w: np.ndarray) -> np.ndarray:
    small = np.abs(w) <= 0.25
    acc = np.zeros_like(w)
    wp = w.copy()
    for b, s in zip(_BINOMS, _S_CONSTS):
        acc += b * wp * s
        wp *= w * w
    series = -2.0 * acc
    with np.errstate(divide="ignore", invalid="ignore"):
        sw = np.sin(math.pi * w)
        closed = math.pi ** 3 * np.cos(math.pi * w) / (sw * sw * sw)
        window = np.zeros_like(w)
        for k in range(-3, 4):
            window += (w - k) ** -3.0
        other = closed - window
    return np.where(small, series, other)


def n3_fold(w0: float, N: int) -> complex:
    """Exact sum over n3 in Z of the window-and-damping ladder at w0."""
    ewm1 = complex(-2.0 * math.sin(math.pi * N * w0) ** 2,
                   -math.sin(TWO_PI * N * w0))
    if w0 == 0.0:
        k0 = complex(0.0, -TWO_PI * N)
    else:
        k0 = ewm1 / w0 * _sinc2(w0)
    rest = sum((w0 - k) ** -3 for k in range(-3, 4) if k != 0)
    rest += w3_cubic_tail(w0)
    s = math.sin(TWO_PI * w0)
    return k0 + ewm1 * (s * s) / (4.0 * math.pi ** 2) * rest


# ---- truncated double sum ---------------------------------------------------


@dataclass(frozen=True)
class DbarResult:
    value: float
    imag_residual: float
    small_divisor_count: int
    tail_bound: float
    n_pairs: int

    def __float__(self) -> float:
        return self.value


def dbar_truncated(p: SpectralParams) -> DbarResult:
    """Truncated averaged discrepancy: sum over 0 < max(|n1|,|n2|) <= K.

    The n3 ladder is folded exactly for every pair.  Pairs are accumulated
    into shells s = max(|n1|,|n2|), rows swept in ascending n1 with
    deterministic vector arithmetic, and shells reduced in ascending order
    with compensated summation, so identical parameters give bit-identical
    results.  The imaginary residual must vanish to 1e-9*(1+|value|) by
    conjugate pairing, else ResidualError is raised.

    tail_bound is the summed magnitude of the outermost octave of shells,
    an empirical proxy for the truncation error beyond K.
    """
    K = p.cutoff
    if K == 0:
        return DbarResult(0.0, 0.0, 0, 0.0, 0)
    f = p.f
    scale = 1 << f
    r1, r2 = p.alpha[0].raw, p.alpha[1].raw
    x1f = scaled_to_float(p.x.x1_raw, p.x.f)
    x2f = scaled_to_float(p.x.x2_raw, p.x.f)
    tauf = p.x.x1_raw / p.x.x2_raw
    a1r, a2r = p.a[0].raw, p.a[1].raw
    have_phase = not (a1r == 0 and a2r == 0)
    N = p.N
    small_thr = 2.0 ** -(f // 2)

    def limb_vectors(step_raw: int) -> tuple[np.ndarray, np.ndarray]:
        """(hi, lo) of (n2 * step_raw) mod 2^f for n2 = -K..K."""
        his = np.empty(2 * K + 1, dtype=np.uint64)
        los = np.empty(2 * K + 1, dtype=np.uint64)
        v = (-K * step_raw) % scale
        for idx in range(2 * K + 1):
            his[idx] = v >> 64
            los[idx] = v & 0xFFFFFFFFFFFFFFFF
            v = (v + step_raw) % scale
        return his, los

    def centered(hi_vec, lo_vec, frac1: int) -> np.ndarray:
        """Centered float of frac1 + vec mod 1; two-part conversion on the
        magnitude so tiny values of either sign keep full precision."""
        f1lo = np.uint64(frac1 & 0xFFFFFFFFFFFFFFFF)
        lo = lo_vec + f1lo
        carry = (lo < f1lo).astype(np.uint64)
        hi = hi_vec + np.uint64(frac1 >> 64) + carry
        neg = hi >= np.uint64(1 << 63)
        borrow = (lo != np.uint64(0)).astype(np.uint64)
        mag_hi = np.where(neg, np.uint64(0) - hi - borrow, hi)
        mag_lo = np.where(neg, np.uint64(0) - lo, lo)
        val = (mag_hi.astype(np.float64) * 2.0 ** (64 - f)
               + mag_lo.astype(np.float64) * 2.0 ** (-f))
        return np.where(neg, -val, val)

    n2s = np.arange(-K, K + 1, dtype=np.int64)
    hi2, lo2 = limb_vectors(r2)
    if have_phase:
        hi2a, lo2a = limb_vectors(a2r)
    # exact phase reduction of n2 x2 before exponentiating
    e2 = np.exp(2j * math.pi / scale
                * np.array([(k * p.x.x2_raw) % scale for k in range(-K, K + 1)],
                           dtype=np.float64))
    y = TWO_PI * n2s / float(N * N)
    with np.errstate(divide="ignore", invalid="ignore"):
        w1_n2 = np.where(n2s == 0, 1.0, (np.sin(y) / y) ** 2)
    abs_n2 = np.abs(n2s)

    re_shell = np.zeros(K + 1)
    im_shell = np.zeros(K + 1)
    small_count = 0
    n_pairs = 0
    center = K  # index of n2 = 0

    for n1 in range(-K, K + 1):
        frac1 = (n1 * r1) % scale
        w0 = centered(hi2, lo2, frac1)

        w1a = fejer_weight(n1, N)
        if n1 == 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                bracket = (tauf * (e2 - 1.0) / (n2s * n2s).astype(np.float64)
                           - 2j * math.pi * x1f / n2s)
        else:
            e1 = e_unit(n1, p.x.x1_raw, p.x.f)
            q, rem = divmod(n1 * p.x.x1_raw, p.x.x2_raw)
            d = (q - n2s).astype(np.float64) + (rem / p.x.x2_raw)
            with np.errstate(divide="ignore", invalid="ignore"):
                bracket = (1.0 - e2) / (n1 * n2s).astype(np.float64) \
                    + (e1 - e2) / (n1 * d)
            # the two columns nearest the resonance lose all relative
            # precision in the float difference; recompute them exactly
            for n2c in (q, q + 1):
                if -K <= n2c <= K and n2c != 0:
                    j = int(n2c) + K
                    dn = n1 * p.x.x1_raw - n2c * p.x.x2_raw
                    bracket[j] = (1.0 - e2[j]) / (n1 * n2c) \
                        + x2f * e_unit(n2c, p.x.x2_raw, p.x.f) \
                        * _chord_ratio(dn, p.x.f) / n1
            bracket[center] = (-2j * math.pi * x2f / n1
                               + (e1 - 1.0) / (tauf * n1 * n1))

        with np.errstate(divide="ignore", invalid="ignore"):
            snw = np.sin(math.pi * N * w0)
            ewm1 = -2.0 * snw * snw - 1j * np.sin(TWO_PI * N * w0)
            s2w = np.sin(TWO_PI * w0)
            sinc2 = (s2w / (TWO_PI * w0)) ** 2
            k0 = np.where(w0 == 0.0, -2j * math.pi * N,
                          ewm1 / w0 * np.where(w0 == 0.0, 1.0, sinc2))
            rest = np.zeros_like(w0)
            for k in range(-3, 4):
                if k != 0:
                    rest += (w0 - k) ** -3.0
            rest += _w3_cubic_tail_vec(w0)
            fold = k0 + ewm1 * (s2w * s2w) / (4.0 * math.pi ** 2) * rest

        if have_phase:
            ph = centered(hi2a, lo2a, (n1 * a1r) % scale)
            phase = np.exp(-2j * math.pi * ph)
            terms = PREF * w1a * phase * bracket * w1_n2 * fold
        else:
            terms = PREF * w1a * bracket * w1_n2 * fold

        shells = np.maximum(abs(n1), abs_n2)
        if n1 == 0:
            terms[center] = 0.0
            small_count += int(np.count_nonzero(
                (np.abs(w0) < small_thr) & (n2s != 0)))
            n_pairs += 2 * K
        else:
            small_count += int(np.count_nonzero(np.abs(w0) < small_thr))
            n_pairs += 2 * K + 1
        re_shell += np.bincount(shells, weights=terms.real, minlength=K + 1)
        im_shell += np.bincount(shells, weights=terms.imag, minlength=K + 1)

    def kahan(xs: np.ndarray) -> float:
        s = 0.0
        c = 0.0
        for x in xs:
            y = float(x) - c
            t = s + y
            c = (t - s) - y
            s = t
        return s

    value = kahan(re_shell[1:])
    resid = kahan(im_shell[1:])
    if abs(resid) >= 1e-9 * (1.0 + abs(value)):
        raise ResidualError(
            f"imaginary residual {resid:.3e} vs value {value:.6f}")
    mags = np.hypot(re_shell, im_shell)
    tail = float(np.sum(mags[K // 2 + 1:]))
    return DbarResult(value, resid, small_count, tail, n_pairs)


def tail_bound(p: SpectralParams) -> float:
    """Empirical truncation-tail proxy at the params' own cutoff."""
    return dbar_truncated(p).tail_bound


# ---- direct-counting oracle -------------------------------------------------


@dataclass(frozen=True)
class QuadGrid:
    q1: int = 9
    q2: int = 9
    q3: int = 65

    def __post_init__(self) -> None:
        if self.q1 < 1 or self.q2 < 1 or self.q3 < 4:
            raise ValueError("grid sizes must be >= 1 (>= 4 for u3)")


def _tri_mass(c0: float, c1: float, L: float) -> float:
    """Mass of the triangular density (1/L)(1-|u|/L) on [c0, c1]."""
    def anti(u: float) -> float:
        return (u - u * u / (2 * L)) / L if u >= 0 else (u + u * u / (2 * L)) / L
    return anti(c1) - anti(c0)


_U3_PIECES = ((-2, 0.125), (-1, 0.375), (0, 0.375), (1, 0.125))


def _clip(poly, a, b, c):
    """Clip a convex polygon against a*u1 + b*u2 <= c."""
    if not poly:
        return poly
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        fp = a * px + b * py - c
        fq = a * qx + b * qy - c
        if fp <= 0:
            out.append((px, py))
            if fq > 0:
                t = fp / (fp - fq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
        elif fq <= 0:
            t = fp / (fp - fq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def _weighted_polygon_mass(poly, L: float) -> float:
    """Integral of the product triangular density over a convex polygon."""
    total = 0.0
    for s1 in (1.0, -1.0):
        piece0 = _clip(poly, -s1, 0.0, 0.0)
        for s2 in (1.0, -1.0):
            piece = _clip(piece0, 0.0, -s2, 0.0)
            if len(piece) < 3:
                continue
            x0, y0 = piece[0]
            acc = 0.0
            inv = 1.0 / (L * L)

            def w(ux, uy):
                return (1.0 - s1 * ux / L) * (1.0 - s2 * uy / L) * inv

            for i in range(1, len(piece) - 1):
                x1, y1 = piece[i]
                x2, y2 = piece[i + 1]
                area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                acc += area / 3.0 * (
                    w((x0 + x1) / 2, (y0 + y1) / 2)
                    + w((x1 + x2) / 2, (y1 + y2) / 2)
                    + w((x2 + x0) / 2, (y2 + y0) / 2))
            total += acc
    return total


def _point_mass(q1: float, q2: float, x1f: float, x2f: float, L: float) -> float:
    """Weighted measure of {u in [-L,L]^2 : (q+u) mod 1 in triangle}."""
    total = 0.0
    for k1 in (-1, 0, 1):
        s1 = q1 - k1
        if s1 + L <= 0 or s1 - L >= x1f:
            continue
        for k2 in (-1, 0, 1):
            s2 = q2 - k2
            if s2 + L <= 0 or s2 - L >= x2f:
                continue
            poly = [(-L, -L), (L, -L), (L, L), (-L, L)]
            poly = _clip(poly, -1.0, 0.0, s1)
            poly = _clip(poly, 1.0, 0.0, x1f - s1)
            poly = _clip(poly, 0.0, -1.0, s2)
            poly = _clip(poly, 0.0, 1.0, x2f - s2)
            poly = _clip(poly, x2f, x1f, x1f * x2f - x2f * s1 - x1f * s2)
            total += _weighted_polygon_mass(poly, L)
    return total


def dbar_quadrature(p: SpectralParams, grid: QuadGrid = QuadGrid(),
                    exact_cells: bool = True) -> float:
    """Independent direct-counting oracle for dbar_truncated.

    Triangular-weighted triple average of the oscillated discrepancy
    D(a+u; u3, N+u3).  The u3 axis is integrated exactly (the window is
    constant between integers, so the q3 cells collapse onto the four unit
    pieces).  With exact_cells the (u1, u2) average of each orbit point's
    membership indicator is integrated in closed form (polygon clipping
    against the product triangular weight), which is the exact limit of the
    grid rule; with exact_cells=False the integrand is evaluated through
    orbit.discrepancy at the q1 x q2 cell midpoints.
    """
    N = p.N
    f = p.f
    scale = 1 << f
    mask = scale - 1
    L = 2.0 / (N * N)
    vol = p.x.volume_float
    r1, r2 = p.alpha[0].raw, p.alpha[1].raw
    a1, a2 = p.a[0].raw, p.a[1].raw

    if exact_cells:
        x1f = scaled_to_float(p.x.x1_raw, f)
        x2f = scaled_to_float(p.x.x2_raw, f)
        masses = {}
        for n in range(-1, N + 2):
            q1 = ((a1 + n * r1) & mask) / scale
            q2 = ((a2 + n * r2) & mask) / scale
            masses[n] = _point_mass(q1, q2, x1f, x2f, L)
        total = 0.0
        for j, m3 in _U3_PIECES:
            s = sum(masses[n] for n in range(j + 1, j + N + 1))
            total += m3 * (s - N * vol)
        return total

    total = 0.0
    for i in range(grid.q1):
        c0 = -L + 2 * L * i / grid.q1
        c1 = -L + 2 * L * (i + 1) / grid.q1
        m1 = _tri_mass(c0, c1, L)
        u1 = round((c0 + c1) / 2 * scale)
        for jj in range(grid.q2):
            d0 = -L + 2 * L * jj / grid.q2
            d1 = -L + 2 * L * (jj + 1) / grid.q2
            m2 = _tri_mass(d0, d1, L)
            u2 = round((d0 + d1) / 2 * scale)
            for j, m3 in _U3_PIECES:
                b1 = FixedUnit((a1 + u1 + j * r1) % scale, f)
                b2 = FixedUnit((a2 + u2 + j * r2) % scale, f)
                tr = discrepancy(OrbitSpec(p.alpha, (b1, b2), N), p.x)
                d_val = float(tr.hits[-1]) - float(N) * vol if N else 0.0
                total += m1 * m2 * m3 * d_val
    return total


# ---- linear forms and exponential sums over section-5 boxes -----------------


def linear_form(s: LinearFormSelector, n: Frequency, p: SpectralParams) -> float:
    """Lambda_s(n) = n1(d1 x1 - a1) + n2(d2 x2 - a2) - d3 N (n.alpha - n3)."""
    x1f = scaled_to_float(p.x.x1_raw, p.x.f)
    x2f = scaled_to_float(p.x.x2_raw, p.x.f)
    num, f = omega_exact(n.n1, n.n2, n.n3, p.alpha)
    w0 = scaled_to_float(num, f)
    return (n.n1 * (s.d1 * x1f - float(p.a[0]))
            + n.n2 * (s.d2 * x2f - float(p.a[1]))
            - s.d3 * p.N * w0)


def fitted_delta_n(N: int) -> float:
    """delta_N ~ (log N)^-2, adjusted so (1+delta)^k hits (log N)^2 for an
    integer k (the neighbor step of the section-5 box lattice)."""
    lg2 = math.log(N) ** 2
    if lg2 <= 1.0:
        raise ValueError("N too small for the box lattice")
    d0 = 1.0 / lg2
    k = max(1, round(math.log(lg2) / math.log1p(d0)))
    return lg2 ** (1.0 / k) - 1.0


def ul_l_range(N: int, E: float, delta: float) -> tuple[range, range]:
    """Admissible l for the first two coordinates and for l3:
    (log N)^E <= (1+delta)^l <= N^2/4 (and <= (N^2/4)^2 for l3)."""
    lg = math.log1p(delta)
    lo = math.ceil(E * math.log(math.log(N)) / lg)
    hi12 = math.floor(math.log(N * N / 4.0) / lg)
    hi3 = math.floor(2 * math.log(N * N / 4.0) / lg)
    return range(lo, hi12 + 1), range(lo, hi3 + 1)


@dataclass(frozen=True)
class UlBox:
    """One geometric box U(l, eps) of the section-5 lattice decomposition:
    (1+delta)^{l_j} <= eps_j * (coordinate j) < (1+delta)^{l_j+1} with
    coordinates (n1, n1 tau - n2, n1 (n1 tau - n2)(n.alpha - n3))."""

    l1: int
    l2: int
    l3: int
    eps1: int
    eps2: int
    delta: float

    def __post_init__(self) -> None:
        if self.eps1 not in (-1, 1) or self.eps2 not in (-1, 1):
            raise ValueError("signs must be +-1")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def bounds(self, j: int) -> tuple[float, float]:
        l = (self.l1, self.l2, self.l3)[j]
        return (1.0 + self.delta) ** l, (1.0 + self.delta) ** (l + 1)


@dataclass(frozen=True)
class ExpSumResult:
    sum_plus: complex
    sum_minus: complex
    count_plus: int
    count_minus: int
    big_ratio: float

    @property
    def is_big(self) -> bool:
        return self.big_ratio >= 1.0


def _enumerate_ul(box: UlBox, p: SpectralParams):
    """Yield (n1, n2, n3, product) in U(l, eps) for eps3 = +1 and -1 merged;
    the sign of the triple product separates the two sets."""
    lo1, hi1 = box.bounds(0)
    lo2, hi2 = box.bounds(1)
    x1r, x2r = p.x.x1_raw, p.x.x2_raw
    n1_lo = math.ceil(lo1)
    n1_hi = math.ceil(hi1) - 1
    lo2f, hi2f = Fraction(lo2), Fraction(hi2)
    for m in range(n1_lo, n1_hi + 1):
        n1 = box.eps1 * m
        t = Fraction(n1 * x1r, x2r)
        if box.eps2 == 1:
            n2_lo = math.floor(t - hi2f) + 1
            n2_hi = math.floor(t - lo2f)
        else:
            n2_lo = math.ceil(t + lo2f)
            n2_hi = math.ceil(t + hi2f) - 1
        for n2 in range(n2_lo, n2_hi + 1):
            n3 = nearest_n3(n1, n2, p.alpha)
            num, f = omega_exact(n1, n2, n3, p.alpha)
            w0 = scaled_to_float(num, f)
            d = float(Fraction(n1 * x1r - n2 * x2r, x2r))
            yield n1, n2, n3, n1 * d * w0


def exp_sum_over_box(box: UlBox, s: LinearFormSelector,
                     p: SpectralParams) -> ExpSumResult:
    """Exponential sums over the eps3 = +1 and eps3 = -1 companions of a box.

    big_ratio = |S+ - S-| * log N / (|U+| + |U-|); the box is flagged big
    when the signed sums fail to cancel by a 1/log N factor (ratio >= 1).
    """
    lo3, hi3 = box.bounds(2)
    sp = sm = 0j
    cp = cm = 0
    for n1, n2, n3, prod in _enumerate_ul(box, p):
        ap = abs(prod)
        if not lo3 <= ap < hi3:
            continue
        lam = linear_form(s, Frequency(n1, n2, n3), p)
        e = cmath.exp(2j * math.pi * lam)
        if prod >= 0:
            sp += e
            cp += 1
        else:
            sm += e
            cm += 1
    if cp + cm == 0:
        raise EmptyBox("both signed boxes are empty")
    ratio = abs(sp - sm) * math.log(p.N) / (cp + cm)
    return ExpSumResult(sp, sm, cp, cm, ratio)


# ---- CSV dump ---------------------------------------------------------------


def spectral_rows(p: SpectralParams):
    """Per-frequency dump rows (n3 = nearest): shells of max(|n1|,|n2|)
    ascending, lexicographic within a shell.

    For frequencies where the two-family split is undefined (n1 = 0, n2 = 0
    or the resonance n1 tau = n2) the combined limit term is reported in the
    f1 column and the f2 column is zero.  divisorProduct is
    max(1,|n1|) * |n1 tau - n2| * |n.alpha - n3|.
    """
    for shell in range(1, p.cutoff + 1):
        pairs = []
        for n2 in range(-shell, shell + 1):
            pairs.append((-shell, n2))
            pairs.append((shell, n2))
        for n1 in range(-shell + 1, shell):
            pairs.append((n1, -shell))
            pairs.append((n1, shell))
        for n1, n2 in sorted(pairs):
            n3 = nearest_n3(n1, n2, p.alpha)
            num, f = omega_exact(n1, n2, n3, p.alpha)
            w0 = scaled_to_float(num, f)
            dnum = n1 * p.x.x1_raw - n2 * p.x.x2_raw
            d = float(Fraction(dnum, p.x.x2_raw)) if dnum else 0.0
            divprod = max(1, abs(n1)) * abs(d) * abs(w0)
            if n1 != 0 and n2 != 0 and dnum != 0:
                v1 = f1_term(Frequency(n1, n2, n3), p)
                v2 = f2_term(Frequency(n1, n2, n3), p)
            else:
                v1 = term_total(n1, n2, n3, p)
                v2 = 0j
            yield {"n1": n1, "n2": n2, "n3": n3,
                   "reF1": v1.real, "imF1": v1.imag,
                   "reF2": v2.real, "imF2": v2.imag,
                   "divisorProduct": divprod}
