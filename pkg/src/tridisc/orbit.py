"""Direct counting engine for toral translation orbits and triangles.

Streams a + n*alpha mod 1 in exact fixed point, tests membership in right
triangles / convex polygons with exact wide-integer predicates, and produces
discrepancy traces, grid maxima, strip counts and Borel-Cantelli counters.

Membership convention: lower/left boundaries closed, hypotenuse and
upper/right boundaries open, so half-open tiles partition the torus and the
box = lower-triangle + hypotenuse + upper-triangle decomposition is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import _kernels
from .arithmetic import DEFAULT_F, FixedUnit, mul_int_mod1

#: streaming scans switch to the compiled kernel above this many points
KERNEL_CUTOVER = 1 << 15


class InvalidGrid(ValueError):
    pass


class DegeneratePolygon(ValueError):
    pass


@dataclass(frozen=True)
class Triangle:
    """Right triangle with legs x1 <= x2 in (0,1] and slope tau = x1/x2.

    Legs live in (0,1], so raw values run in [1, 2^f]; the value 2^f (i.e.
    exactly 1) is allowed here even though FixedUnit itself excludes it.
    """

    x1_raw: int
    x2_raw: int
    f: int = DEFAULT_F

    def __post_init__(self) -> None:
        if not 1 <= self.x1_raw <= (1 << self.f):
            raise ValueError("x1 out of (0, 1]")
        if not 1 <= self.x2_raw <= (1 << self.f):
            raise ValueError("x2 out of (0, 1]")
        if self.x1_raw > self.x2_raw:
            raise ValueError("need x1 <= x2 so that tau = x1/x2 <= 1")

    @classmethod
    def from_decimals(cls, x1: str, x2: str, f: int = DEFAULT_F) -> "Triangle":
        def leg(s: str) -> int:
            fr = Fraction(s)
            if not 0 < fr <= 1:
                raise ValueError("leg must lie in (0,1]")
            from .arithmetic import _round_half_even

            return _round_half_even(fr * (1 << f))

        return cls(leg(x1), leg(x2), f)

    @classmethod
    def from_scale(cls, tau: FixedUnit, x2_raw: int) -> "Triangle":
        """Triangle with given x2 and x1 = floor(tau * x2) at f bits."""
        x1_raw = (tau.raw * x2_raw) >> tau.f
        if x1_raw < 1:
            raise ValueError("tau * x2 underflows one ulp; leg would be 0")
        return cls(x1_raw, x2_raw, tau.f)

    @property
    def tau(self) -> Fraction:
        return Fraction(self.x1_raw, self.x2_raw)

    @property
    def volume(self) -> tuple[int, int]:
        """Exact volume x1*x2/2 as (numerator, 2^(2f+1))."""
        return self.x1_raw * self.x2_raw, 1 << (2 * self.f + 1)

    @property
    def volume_float(self) -> float:
        num, den = self.volume
        return float(Fraction(num, den))


@dataclass(frozen=True)
class OrbitSpec:
    alpha: tuple[FixedUnit, FixedUnit]
    start: tuple[FixedUnit, FixedUnit]
    N: int

    def __post_init__(self) -> None:
        if self.N < 0:
            raise ValueError("N must be >= 0")
        fs = {self.alpha[0].f, self.alpha[1].f, self.start[0].f, self.start[1].f}
        if len(fs) != 1:
            raise ValueError("mixed fixed-point precisions in orbit spec")

    @property
    def f(self) -> int:
        return self.alpha[0].f


@dataclass
class DiscrepancyTrace:
    """Cumulative hit counts plus the exact volume pair.

    D(m) = hits[m-1] - m*vol is exposed through one canonical float formula
    (float(hits) - float(m) * vol_float) so traces from different engines
    compare bit-identically; the integer data stays available for exact
    checks.
    """

    hits: list[int]
    vol_num: int
    vol_den: int

    @property
    def N(self) -> int:
        return len(self.hits)

    @property
    def vol_float(self) -> float:
        return float(Fraction(self.vol_num, self.vol_den))

    def d(self, m: int) -> float:
        return float(self.hits[m - 1]) - float(m) * self.vol_float

    def d_exact_num(self, m: int) -> int:
        """Exact numerator of D(m) over vol_den."""
        return self.hits[m - 1] * self.vol_den - m * self.vol_num

    def values(self) -> list[float]:
        v = self.vol_float
        return [float(h) - float(m + 1) * v for m, h in enumerate(self.hits)]

    def max_abs(self) -> tuple[float, int]:
        """(max_m |D(m)|, first argmax m); (0.0, 0) for an empty trace."""
        best, argm = 0.0, 0
        v = self.vol_float
        for m, h in enumerate(self.hits, start=1):
            d = float(h) - float(m) * v
            ad = d if d >= 0.0 else -d
            if ad > best:
                best, argm = ad, m
        return best, argm


def in_triangle(p: tuple[FixedUnit, FixedUnit], t: Triangle) -> bool:
    """Exact membership: 0 <= p1 < x1, 0 <= p2 < x2, p1/x1 + p2/x2 < 1."""
    r1, r2 = p[0].raw, p[1].raw
    return (r1 < t.x1_raw and r2 < t.x2_raw
            and r1 * t.x2_raw + r2 * t.x1_raw < t.x1_raw * t.x2_raw)


def discrepancy(spec: OrbitSpec, t: Triangle) -> DiscrepancyTrace:
    """Full trace of D(m) for m = 1..N by exact streaming."""
    if t.f != spec.f:
        raise ValueError("triangle precision differs from orbit")
    mask = (1 << spec.f) - 1
    p1, p2 = spec.start[0].raw, spec.start[1].raw
    s1, s2 = spec.alpha[0].raw, spec.alpha[1].raw
    x1, x2 = t.x1_raw, t.x2_raw
    rhs = x1 * x2
    hits: list[int] = []
    h = 0
    for _ in range(spec.N):
        p1 = (p1 + s1) & mask
        p2 = (p2 + s2) & mask
        if p1 < x1 and p2 < x2 and p1 * x2 + p2 * x1 < rhs:
            h += 1
        hits.append(h)
    num, den = t.volume
    return DiscrepancyTrace(hits, num, den)


def discrepancy_max(spec: OrbitSpec, t: Triangle,
                    force_python: bool = False) -> tuple[float, int, int]:
    """O(1)-memory scan: (max_m |D(m)|, argmax m, hits at N)."""
    if t.f != spec.f:
        raise ValueError("triangle precision differs from orbit")
    use_py = force_python or spec.N < KERNEL_CUTOVER
    return _kernels.tri_scan(
        spec.start[0].raw, spec.start[1].raw,
        spec.alpha[0].raw, spec.alpha[1].raw,
        t.x1_raw, t.x2_raw, spec.f, t.volume_float, spec.N,
        force_python=use_py)


# ---- grid maximum ----------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: na1 x na2 starting points, nx scales x2 = k/nx."""

    na1: int = 16
    na2: int = 16
    nx: int = 32

    def __post_init__(self) -> None:
        if self.na1 < 1 or self.na2 < 1 or self.nx < 1:
            raise InvalidGrid("grid sizes must be >= 1")


@dataclass(frozen=True)
class MaxDiscResult:
    delta_hat: float
    argm: int
    a: tuple[FixedUnit, FixedUnit]
    x2_raw: int
    x1_raw: int


def grid_cells(tau: FixedUnit, grid: GridSpec) -> Iterable[tuple[FixedUnit, FixedUnit, Triangle]]:
    """Deterministic cell order: a row-major, then x2 ascending."""
    f = tau.f
    scale = 1 << f
    starts1 = [FixedUnit((i * scale) // grid.na1, f) for i in range(grid.na1)]
    starts2 = [FixedUnit((j * scale) // grid.na2, f) for j in range(grid.na2)]
    tris = [Triangle.from_scale(tau, (k * scale) // grid.nx)
            for k in range(1, grid.nx + 1)]
    for a1 in starts1:
        for a2 in starts2:
            for t in tris:
                yield a1, a2, t


def max_discrepancy(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit,
                    N: int, grid: GridSpec, threads: int = 1,
                    force_python: bool = False) -> MaxDiscResult:
    """Grid lower bound for the maximal discrepancy at slope tau.

    Maximizes |D| over 1 <= m <= N, the na1 x na2 starting grid and the nx
    leg scales; refining the grid never decreases the result.  Cells are
    independent; with threads > 1 they run concurrently and are reduced in
    the fixed cell order, so the result does not depend on thread count.
    """
    cells = list(grid_cells(tau, grid))

    def scan(cell):
        a1, a2, t = cell
        spec = OrbitSpec(alpha, (a1, a2), N)
        return discrepancy_max(spec, t, force_python=force_python)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(scan, cells))
    else:
        results = [scan(c) for c in cells]
    best: MaxDiscResult | None = None
    for (a1, a2, t), (d, argm, _) in zip(cells, results):
        if best is None or d > best.delta_hat:
            best = MaxDiscResult(d, argm, (a1, a2), t.x2_raw, t.x1_raw)
    assert best is not None
    return best


# ---- strips and Borel-Cantelli counters ------------------------------------


def bc_counter(alpha_i: FixedUnit, N: int) -> int:
    """#{1 <= n <= N : ||n alpha_i|| < 2/N^2}, exact."""
    if N < 1:
        raise ValueError("N must be >= 1")
    scale = 1 << alpha_i.f
    half = scale >> 1
    v = 0
    count = 0
    nsq = N * N
    for _ in range(N):
        v = (v + alpha_i.raw) & (scale - 1)
        d = v if v <= half else scale - v
        if d * nsq < 2 * scale:
            count += 1
    return count


@dataclass(frozen=True)
class StripCounts:
    count_h: int
    count_v: int
    count_t: int


def strip_counts(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit, N: int,
                 u: tuple[float, float]) -> StripCounts:
    """Majorant counts for the three strips of a 2/N^2 perturbation.

    V counts n in [1,N] with ||n alpha_1|| <= 2/N^2, H the same for alpha_2,
    and T counts n in [-N,N]\\{0} whose orbit point lies in the tilted band
    |c1 + tau*c2| <= 2/N^2 through the origin (centered representatives).
    The counts do not depend on the offsets u; u is only validated against
    the 2/N^2 amplitude the bounds are valid for.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    amp = 2.0 / (N * N)
    if abs(u[0]) > amp or abs(u[1]) > amp:
        raise ValueError("offsets exceed the 2/N^2 oscillation amplitude")
    f = alpha[0].f
    scale = 1 << f
    mask = scale - 1
    half = scale >> 1
    nsq = N * N
    thr = 2 * scale  # ||.|| * N^2 <= 2 in raw units
    cv = ch = 0
    v1 = v2 = 0
    for _ in range(N):
        v1 = (v1 + alpha[0].raw) & mask
        v2 = (v2 + alpha[1].raw) & mask
        d1 = v1 if v1 <= half else scale - v1
        d2 = v2 if v2 <= half else scale - v2
        if d1 * nsq <= thr:
            cv += 1
        if d2 * nsq <= thr:
            ch += 1
    ct = 0
    band = 2 * scale * scale  # |c1*2^f + tau*c2| * N^2 <= 2*2^(2f)
    for n in range(-N, N + 1):
        if n == 0:
            continue
        c1 = (n * alpha[0].raw) % scale
        c2 = (n * alpha[1].raw) % scale
        if c1 >= half:
            c1 -= scale
        if c2 >= half:
            c2 -= scale
        if abs(c1 * scale + tau.raw * c2) * nsq <= band:
            ct += 1
    return StripCounts(ch, cv, ct)


# ---- convex polygons --------------------------------------------------------


def _normalize_polygon(vertices: Sequence[tuple[FixedUnit, FixedUnit]]):
    """Validate convexity, return CCW raw vertex list and 2*area numerator."""
    if len(vertices) < 3:
        raise DegeneratePolygon("need at least 3 vertices")
    f = vertices[0][0].f
    pts = [(v[0].raw, v[1].raw) for v in vertices]
    n = len(pts)
    twice_area = 0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        twice_area += x0 * y1 - x1 * y0
    if twice_area == 0:
        raise DegeneratePolygon("zero area")
    if twice_area < 0:
        pts.reverse()
        twice_area = -twice_area
    # convexity: all turns non-clockwise, no reflex corner
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        cx, cy = pts[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if cross < 0:
            raise ValueError("vertices do not form a convex polygon")
    return pts, twice_area, f


def _polygon_membership_fn(pts):
    """Exact membership with edge rule: an edge counts iff its inward
    normal points up-right (nu_x > 0, or nu_x == 0 and nu_y > 0)."""
    n = len(pts)
    edges = []
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        # inward normal of a CCW edge is (-ey, ex)
        include = (-ey > 0) or (ey == 0 and ex > 0)
        edges.append((ax, ay, ex, ey, include))

    def member(px: int, py: int) -> bool:
        for ax, ay, ex, ey, include in edges:
            cross = ex * (py - ay) - ey * (px - ax)
            if cross < 0:
                return False
            if cross == 0 and not include:
                return False
        return True

    return member


def polygon_discrepancy(spec: OrbitSpec,
                        vertices: Sequence[tuple[FixedUnit, FixedUnit]]
                        ) -> DiscrepancyTrace:
    """Discrepancy trace for a convex polygon inside [0,1)^2.

    Shoelace area; half-open membership consistent with in_triangle (a point
    on an edge counts iff the polygon is locally to its upper-right).
    """
    pts, twice_area, f = _normalize_polygon(vertices)
    if f != spec.f:
        raise ValueError("polygon precision differs from orbit")
    member = _polygon_membership_fn(pts)
    mask = (1 << f) - 1
    p1, p2 = spec.start[0].raw, spec.start[1].raw
    s1, s2 = spec.alpha[0].raw, spec.alpha[1].raw
    hits: list[int] = []
    h = 0
    for _ in range(spec.N):
        p1 = (p1 + s1) & mask
        p2 = (p2 + s2) & mask
        if member(p1, p2):
            h += 1
        hits.append(h)
    # area = twice_area / (2 * 2^(2f)); express over 2^(2f+1) like triangles
    return DiscrepancyTrace(hits, twice_area, 1 << (2 * f + 1))
