"""Compiled counting kernels (numba) with pure-Python fallbacks.

All 128-bit quantities travel as (hi, lo) uint64 pairs; additions wrap mod
2^128 with explicit carries, so orbits never drift.  Discrepancy values are
produced by one canonical formula, float(hits) - float(m)*vol_float, in both
the compiled and the Python paths, which keeps the two engines bit-identical.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

_M32 = np.uint64(0xFFFFFFFF)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U32 = np.uint64(32)
_HALF = np.uint64(0x8000000000000000)
_TW64 = 2.0**-64
_TW128 = 2.0**-128
MASK128 = (1 << 128) - 1


def split128(v: int) -> tuple[np.uint64, np.uint64]:
    return np.uint64(v >> 64), np.uint64(v & 0xFFFFFFFFFFFFFFFF)


def limbs32(v: int, n: int) -> np.ndarray:
    return np.array([(v >> (32 * i)) & 0xFFFFFFFF for i in range(n)], dtype=np.uint64)


def to_float128(v: int) -> float:
    """Canonical float64 of v/2^128 (two-part, accurate near 0 and 1)."""
    return float(v >> 64) * _TW64 + float(v & 0xFFFFFFFFFFFFFFFF) * _TW128


# ---- triangle orbit scan --------------------------------------------------


@njit(cache=True, fastmath=False, nogil=True)
def _tri_scan(a1h, a1l, a2h, a2l, s1h, s1l, s2h, s2l,
              x1mh, x1ml, x2mh, x2ml,
              x1limbs, x2limbs, rhslimbs, fx1, fx2, fx12, volf, N):
    """Stream a + n*alpha for n=1..N; return (max|D|, argmax m, hits at N).

    Box tests compare against x-1 so legs equal to 1.0 work; the hypotenuse
    test uses a float screen with an exact 256-bit limb fallback.
    """
    p1h, p1l = a1h, a1l
    p2h, p2l = a2h, a2l
    hits = 0
    best = 0.0
    argm = 0
    cols = np.zeros(9, dtype=np.uint64)
    lhs = np.zeros(9, dtype=np.uint64)
    pa = np.zeros(4, dtype=np.uint64)
    pb = np.zeros(4, dtype=np.uint64)
    for m in range(1, N + 1):
        p1l = p1l + s1l
        c = _U1 if p1l < s1l else _U0
        p1h = p1h + s1h + c
        p2l = p2l + s2l
        c = _U1 if p2l < s2l else _U0
        p2h = p2h + s2h + c
        if ((p1h < x1mh) or (p1h == x1mh and p1l <= x1ml)) and \
           ((p2h < x2mh) or (p2h == x2mh and p2l <= x2ml)):
            f1 = float(p1h) * _TW64 + float(p1l) * _TW128
            f2 = float(p2h) * _TW64 + float(p2l) * _TW128
            t = f1 * fx2 + f2 * fx1 - fx12
            if t < -1e-11:
                hits += 1
            elif t <= 1e-11:
                # exact: p1*x2 + p2*x1 < x1*x2 via 32-bit limb schoolbook
                for k in range(9):
                    cols[k] = _U0
                pa[0] = p1l & _M32
                pa[1] = p1l >> _U32
                pa[2] = p1h & _M32
                pa[3] = p1h >> _U32
                pb[0] = p2l & _M32
                pb[1] = p2l >> _U32
                pb[2] = p2h & _M32
                pb[3] = p2h >> _U32
                for i in range(4):
                    for j in range(4):
                        pr = pa[i] * x2limbs[j]
                        cols[i + j] += pr & _M32
                        cols[i + j + 1] += pr >> _U32
                        pr = pb[i] * x1limbs[j]
                        cols[i + j] += pr & _M32
                        cols[i + j + 1] += pr >> _U32
                carry = _U0
                for k in range(9):
                    t2 = cols[k] + carry
                    lhs[k] = t2 & _M32
                    carry = t2 >> _U32
                for k in range(8, -1, -1):
                    if lhs[k] < rhslimbs[k]:
                        hits += 1
                        break
                    elif lhs[k] > rhslimbs[k]:
                        break
        d = float(hits) - float(m) * volf
        ad = d if d >= 0.0 else -d
        if ad > best:
            best = ad
            argm = m
    return best, argm, hits


def _tri_scan_py(a1_raw, a2_raw, alpha1_raw, alpha2_raw, x1_raw, x2_raw,
                 f, vol_float, N):
    """Pure-Python mirror of _tri_scan with identical float semantics."""
    mask = (1 << f) - 1
    p1, p2 = a1_raw, a2_raw
    rhs = x1_raw * x2_raw
    hits = 0
    best = 0.0
    argm = 0
    for m in range(1, N + 1):
        p1 = (p1 + alpha1_raw) & mask
        p2 = (p2 + alpha2_raw) & mask
        if p1 < x1_raw and p2 < x2_raw and p1 * x2_raw + p2 * x1_raw < rhs:
            hits += 1
        d = float(hits) - float(m) * vol_float
        ad = d if d >= 0.0 else -d
        if ad > best:
            best = ad
            argm = m
    return best, argm, hits


def tri_scan(a1_raw, a2_raw, alpha1_raw, alpha2_raw, x1_raw, x2_raw,
             f, vol_float, N, force_python=False):
    """Max-only triangle discrepancy scan; compiled when f=128 and available."""
    if HAVE_NUMBA and f == 128 and not force_python:
        fx1 = to_float128(x1_raw)
        fx2 = to_float128(x2_raw)
        best, argm, hits = _tri_scan(
            *split128(a1_raw), *split128(a2_raw),
            *split128(alpha1_raw), *split128(alpha2_raw),
            *split128(x1_raw - 1), *split128(x2_raw - 1),
            limbs32(x1_raw, 4), limbs32(x2_raw, 4),
            limbs32(x1_raw * x2_raw, 9),
            fx1, fx2, fx1 * fx2, vol_float, N)
        return float(best), int(argm), int(hits)
    return _tri_scan_py(a1_raw, a2_raw, alpha1_raw, alpha2_raw,
                        x1_raw, x2_raw, f, vol_float, N)


# ---- khintchine screen ----------------------------------------------------


@njit(cache=True, fastmath=False, nogil=True)
def _khintchine_screen(a1h, a1l, a2h, a2l, bound, cmax, out):
    """Collect (n1,n2) in [1,bound]^2 with lb(||n alpha||) * n1 * n2 < cmax.

    The distance lower bound uses only the top limb, so the collected set is
    a superset of any exact threshold below cmax; the caller decides exactly.
    """
    nfound = 0
    r1h, r1l = _U0, _U0
    for n1 in range(1, bound + 1):
        r1l = r1l + a1l
        c = _U1 if r1l < a1l else _U0
        r1h = r1h + a1h + c
        vh, vl = r1h, r1l
        fn1 = float(n1)
        for n2 in range(1, bound + 1):
            vl = vl + a2l
            c = _U1 if vl < a2l else _U0
            vh = vh + a2h + c
            if vh >= _HALF:
                df = float(np.uint64(0xFFFFFFFFFFFFFFFF) - vh) * _TW64
            else:
                df = float(vh) * _TW64
            if df * fn1 * float(n2) < cmax:
                if nfound < out.shape[0]:
                    out[nfound, 0] = n1
                    out[nfound, 1] = n2
                nfound += 1
    return nfound


def khintchine_screen(alpha1_raw, alpha2_raw, bound, cmax=8.0, cap=1 << 20,
                      force_python=False):
    if HAVE_NUMBA and not force_python:
        out = np.zeros((cap, 2), dtype=np.int64)
        n = _khintchine_screen(*split128(alpha1_raw), *split128(alpha2_raw),
                               bound, cmax, out)
        if n > cap:
            raise RuntimeError("khintchine screen overflow; raise cap")
        return [(int(a), int(b)) for a, b in out[:n]]
    half = 1 << 127
    res = []
    r1 = 0
    for n1 in range(1, bound + 1):
        r1 = (r1 + alpha1_raw) & MASK128
        v = r1
        for n2 in range(1, bound + 1):
            v = (v + alpha2_raw) & MASK128
            lb = float(v >> 64) * _TW64 if v < half else \
                float(0xFFFFFFFFFFFFFFFF - (v >> 64)) * _TW64
            if lb * n1 * n2 < cmax:
                res.append((n1, n2))
    return res


# ---- harmonic small-divisor sum -------------------------------------------


@njit(cache=True, fastmath=False, nogil=True)
def _cf_harmonic(th, tl, m):
    total = 0.0
    vh, vl = _U0, _U0
    for n in range(1, m + 1):
        vl = vl + tl
        c = _U1 if vl < tl else _U0
        vh = vh + th + c
        if vh >= _HALF:
            dl = _U0 - vl
            borrow = _U1 if vl != _U0 else _U0
            dh = _U0 - vh - borrow
        else:
            dh, dl = vh, vl
        df = float(dh) * _TW64 + float(dl) * _TW128
        total += 1.0 / (float(n) * df)
    return total


def cf_harmonic_kernel(tau_raw: int, m: int, force_python=False) -> float:
    """sum_{n=1..m} 1/(n ||n tau||) with exact distances."""
    if HAVE_NUMBA and not force_python:
        return float(_cf_harmonic(*split128(tau_raw), m))
    total = 0.0
    v = 0
    half = 1 << 127
    for n in range(1, m + 1):
        v = (v + tau_raw) & MASK128
        d = v if v < half else (1 << 128) - v
        total += 1.0 / (n * to_float128(d))
    return total


# ---- far-divisor row sweeps (Lemma 3.1 / Lemma 3.4) -----------------------
#
# Rows are driven from Python: the caller supplies the exact starting
# fractional part of n1*a1 + n2lo*a2 and the exact integer/fractional split
# of n1*tau, and the kernel walks n2 upward by repeated exact addition.


@njit(cache=True, fastmath=False, nogil=True)
def _far_row(vh, vl, a2h, a2l, n1, tip0, tfh, tfl, n2lo, n2hi,
             theta, mode, border_out, nborder0):
    """One n1-row over n2 in [n2lo, n2hi] restricted to |n1 tau - n2| >= 1/2.

    mode 0 (large-term sum): terms 1/(max{1,|n1|} |n1 tau - n2| ||n alpha||)
    with product-threshold theta and border collection.
    mode 1 (S2 tail): terms with the quartic log factor, no threshold.
    Returns (rowsum, rowcount, nborder).
    """
    total = 0.0
    count = 0
    nborder = nborder0
    tff = float(tfh) * _TW64 + float(tfl) * _TW128
    n1abs = n1 if n1 >= 0 else -n1
    m1 = float(n1abs) if n1abs >= 1 else 1.0
    ln1 = np.log(m1) if m1 > 1.0 else 0.0
    for n2 in range(n2lo, n2hi + 1):
        if n2 != n2lo:
            vl = vl + a2l
            c = _U1 if vl < a2l else _U0
            vh = vh + a2h + c
        di = tip0 - n2
        # |di + frac| >= 1/2, decided exactly from the dyadic fractional part
        if di >= 1 or di <= -2:
            far = True
        elif di == 0:
            far = tfh >= _HALF
        else:  # di == -1, value in [-1,0)
            far = tfh < _HALF or (tfh == _HALF and tfl == _U0)
        if not far:
            continue
        if vh >= _HALF:
            dl = _U0 - vl
            borrow = _U1 if vl != _U0 else _U0
            dh = _U0 - vh - borrow
        else:
            dh, dl = vh, vl
        dist = float(dh) * _TW64 + float(dl) * _TW128
        if dist == 0.0:
            continue  # exact-zero divisor: degenerate, excluded
        dabs = float(di) + tff
        if dabs < 0.0:
            dabs = -dabs
        if mode == 0:
            prod = m1 * dabs * dist
            if prod <= theta * (1.0 + 1e-9):
                if prod >= theta * (1.0 - 1e-9):
                    if nborder < border_out.shape[0]:
                        border_out[nborder, 0] = n1
                        border_out[nborder, 1] = n2
                    nborder += 1
                else:
                    total += 1.0 / prod
                    count += 1
        else:
            a2abs = float(n2 if n2 > 0 else -n2)
            ln2 = np.log(a2abs) if a2abs > 1.0 else 0.0
            lg = ln1 if ln1 > ln2 else ln2
            if lg < 1.0:
                lg = 1.0
            total += 1.0 / (dist * lg * lg * lg * lg * m1 * dabs)
            count += 1
    return total, count, nborder


def _far_row_py(v0, a2_raw, n1, tip0, tf_raw, n2lo, n2hi, theta, mode,
                borders):
    total = 0.0
    count = 0
    half = 1 << 127
    tff = to_float128(tf_raw)
    n1abs = abs(n1)
    m1 = float(max(1, n1abs))
    ln1 = np.log(m1) if m1 > 1.0 else 0.0
    v = v0
    for n2 in range(n2lo, n2hi + 1):
        if n2 != n2lo:
            v = (v + a2_raw) & MASK128
        di = tip0 - n2
        if di >= 1 or di <= -2:
            far = True
        elif di == 0:
            far = tf_raw >= half
        else:
            far = tf_raw <= half
        if not far:
            continue
        d = v if v < half else (1 << 128) - v
        if d == 0:
            continue
        dist = to_float128(d)
        dabs = abs(float(di) + tff)
        if mode == 0:
            prod = m1 * dabs * dist
            if prod <= theta * (1.0 + 1e-9):
                if prod >= theta * (1.0 - 1e-9):
                    borders.append((n1, n2))
                else:
                    total += 1.0 / prod
                    count += 1
        else:
            lg = max(1.0, ln1, np.log(abs(n2)) if abs(n2) > 1 else 0.0)
            total += 1.0 / (dist * lg**4 * m1 * dabs)
            count += 1
    return total, count


def far_row(v0_raw, alpha2_raw, n1, tip0, taufrac_raw, n2lo, n2hi,
            theta=0.0, mode=0, border_cap=4096, force_python=False):
    """Dispatch one far-divisor row; returns (sum, count, border_pairs)."""
    if HAVE_NUMBA and not force_python:
        border = np.zeros((border_cap, 2), dtype=np.int64)
        s, c, nb = _far_row(*split128(v0_raw), *split128(alpha2_raw),
                            n1, tip0, *split128(taufrac_raw),
                            n2lo, n2hi, theta, mode, border, 0)
        if nb > border_cap:
            raise RuntimeError("border overflow")
        return float(s), int(c), [(int(a), int(b)) for a, b in border[:nb]]
    borders: list = []
    s, c = _far_row_py(v0_raw, alpha2_raw, n1, tip0, taufrac_raw,
                       n2lo, n2hi, theta, mode, borders)
    return s, c, borders
