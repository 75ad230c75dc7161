"""256-bit reference evaluators for the spectral terms (oracle use only).

Fixed-point inputs are dyadic rationals, so they convert to mpmath floats
exactly; the evaluators below recompute the term products at 256-bit
precision, and the triangle transform is additionally available through
numerical integration, which shares no divisor algebra with the term
formulas at all.
"""

from __future__ import annotations

import mpmath as mp

from .spectral import Frequency, SpectralParams

PRECISION_BITS = 256


def _ctx():
    ctx = mp.mp.clone()
    ctx.prec = PRECISION_BITS
    return ctx


def _exact(raw: int, f: int, ctx):
    return ctx.mpf(raw) / ctx.mpf(1 << f)


def _window_weights(n: Frequency, p: SpectralParams, ctx):
    a1 = _exact(p.a[0].raw, p.f, ctx)
    a2 = _exact(p.a[1].raw, p.f, ctx)
    al1 = _exact(p.alpha[0].raw, p.f, ctx)
    al2 = _exact(p.alpha[1].raw, p.f, ctx)
    w = n.n1 * al1 + n.n2 * al2 - n.n3
    phase = ctx.e ** (-2j * ctx.pi * (n.n1 * a1 + n.n2 * a2))
    window = (ctx.e ** (-2j * ctx.pi * w * p.N) - 1) / w if w != 0 \
        else ctx.mpc(0, -2 * ctx.pi * p.N)

    def sinc2(y):
        if y == 0:
            return ctx.mpf(1)
        t = 2 * ctx.pi * y
        return (ctx.sin(t) / t) ** 2

    n2sq = ctx.mpf(p.N) ** 2
    weights = sinc2(ctx.mpf(n.n1) / n2sq) * sinc2(ctx.mpf(n.n2) / n2sq) * sinc2(w)
    return phase, window, weights


def _pref(ctx):
    return ctx.mpc(0, -1) / (2 * ctx.pi) ** 3


def f1_term_hp(n: Frequency, p: SpectralParams):
    """256-bit recomputation of the box-family term."""
    ctx = _ctx()
    x2 = _exact(p.x.x2_raw, p.x.f, ctx)
    phase, window, weights = _window_weights(n, p, ctx)
    e2 = ctx.e ** (2j * ctx.pi * n.n2 * x2)
    return _pref(ctx) * phase * (1 - e2) / (n.n1 * n.n2) * window * weights


def f2_term_hp(n: Frequency, p: SpectralParams):
    """256-bit recomputation of the hypotenuse-family term."""
    ctx = _ctx()
    x1 = _exact(p.x.x1_raw, p.x.f, ctx)
    x2 = _exact(p.x.x2_raw, p.x.f, ctx)
    tau = x1 / x2
    phase, window, weights = _window_weights(n, p, ctx)
    e1 = ctx.e ** (2j * ctx.pi * n.n1 * x1)
    e2 = ctx.e ** (2j * ctx.pi * n.n2 * x2)
    d = n.n1 * tau - n.n2
    return _pref(ctx) * phase * (e1 - e2) / (n.n1 * d) * window * weights


def triangle_transform_quad(n1: int, n2: int, x1_raw: int, x2_raw: int,
                            f: int):
    """Fourier transform of the triangle indicator at (-n1, -n2) by
    numerical integration (no divisor algebra): integrates the closed-form
    inner y1 integral over y2 in [0, x2]."""
    ctx = _ctx()
    x1 = _exact(x1_raw, f, ctx)
    x2 = _exact(x2_raw, f, ctx)
    two_pi_i = 2j * ctx.pi

    if n1 != 0:
        def integrand(y2):
            width = x1 * (1 - y2 / x2)
            inner = (1 - ctx.e ** (two_pi_i * n1 * width)) / (-two_pi_i * n1)
            return inner * ctx.e ** (two_pi_i * n2 * y2)
    else:
        def integrand(y2):
            return x1 * (1 - y2 / x2) * ctx.e ** (two_pi_i * n2 * y2)

    return ctx.quad(integrand, [0, x2])


def f2_from_quad(n: Frequency, p: SpectralParams):
    """Hypotenuse-family term reconstructed from the integral transform:
    subtracts the box-family bracket from the full transform, then applies
    the same phase/window/weight product.  Shares no small-divisor algebra
    with f2_term."""
    ctx = _ctx()
    x2 = _exact(p.x.x2_raw, p.x.f, ctx)
    that = triangle_transform_quad(n.n1, n.n2, p.x.x1_raw, p.x.x2_raw, p.x.f)
    e2 = ctx.e ** (2j * ctx.pi * n.n2 * x2)
    piece1 = (1 - e2) / ((2j * ctx.pi) ** 2 * n.n1 * n.n2)
    piece2_bracket = that * (2j * ctx.pi) ** 2 - (1 - e2) / (n.n1 * n.n2)
    phase, window, weights = _window_weights(n, p, ctx)
    return _pref(ctx) * phase * piece2_bracket * window * weights
