"""Growth scans, rate fitting and the box-vs-triangle comparison.

A growth scan walks an increasing schedule of orbit lengths, records the
grid maximum of |D| at each one together with the (log N)^2 and
phi(log log N) normalizations, and checkpoints after every record so an
interrupted scan resumes bit-identically.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

from .arithmetic import FixedUnit
from .orbit import DiscrepancyTrace, GridSpec, max_discrepancy
from .smalldivisors import PhiFunction


class TooFewRecords(ValueError):
    pass


# ---- phi library -------------------------------------------------------------


def phi_power(eps: float = 0.1) -> PhiFunction:
    """phi(n) = n^(1+eps); sum 1/phi converges for eps > 0."""
    e = 1.0 + eps
    return PhiFunction(f"n^{e:g}", lambda x: x ** e, True)


PHI_BUILTINS: dict[str, PhiFunction] = {
    "n^1.1": phi_power(0.1),
    "nlog2": PhiFunction("nlog2", lambda x: x * math.log(x + math.e) ** 2, True),
    "n": PhiFunction("n", lambda x: x, False),
    "nlog": PhiFunction("nlog", lambda x: x * math.log(x + math.e), False),
}


def get_phi(name: str) -> PhiFunction:
    """Builtin by name; "n^<p>" builds the power family on the fly."""
    if name in PHI_BUILTINS:
        return PHI_BUILTINS[name]
    if name.startswith("n^"):
        p = float(name[2:])
        if p <= 1.0:
            raise ValueError("power phi needs exponent > 1 for convergence")
        return phi_power(p - 1.0)
    raise ValueError(f"unknown phi {name!r}")


# ---- growth records ----------------------------------------------------------


@dataclass(frozen=True)
class GrowthRecord:
    n: int
    delta_hat: float
    log_n2: float
    phi_name: str
    phi_term: float
    ratio: float
    argm: int
    a: tuple[FixedUnit, FixedUnit]
    x2_raw: int

    def to_json(self) -> dict:
        return {
            "N": self.n,
            "deltaHat": self.delta_hat,
            "logN2": self.log_n2,
            "phiName": self.phi_name,
            "phiTerm": self.phi_term,
            "ratio": self.ratio,
            "m": self.argm,
            "a": [self.a[0].to_str(), self.a[1].to_str()],
            "x2": f"{self.x2_raw:#x}",
        }

    @classmethod
    def from_json(cls, d: dict) -> "GrowthRecord":
        return cls(d["N"], d["deltaHat"], d["logN2"], d["phiName"],
                   d["phiTerm"], d["ratio"], d["m"],
                   (FixedUnit.parse(d["a"][0]), FixedUnit.parse(d["a"][1])),
                   int(d["x2"], 16))


def _scan_fingerprint(alpha, tau, grid: GridSpec, phi: PhiFunction) -> dict:
    return {
        "alpha": [alpha[0].to_str(), alpha[1].to_str()],
        "tau": tau.to_str(),
        "grid": [grid.na1, grid.na2, grid.nx],
        "phi": phi.name,
    }


def growth_scan(alpha: tuple[FixedUnit, FixedUnit], tau: FixedUnit,
                schedule: Sequence[int], grid: GridSpec,
                phi: PhiFunction = PHI_BUILTINS["n^1.1"],
                checkpoint: str | None = None,
                force_python: bool = False) -> list[GrowthRecord]:
    """One GrowthRecord per schedule entry via the grid maximum.

    With a checkpoint path, completed records are reloaded (after a
    parameter-fingerprint match) and the scan resumes where it stopped;
    the resumed record list is bit-identical to an uninterrupted run.
    """
    if list(schedule) != sorted(set(schedule)):
        raise ValueError("schedule must be strictly increasing")
    fp = _scan_fingerprint(alpha, tau, grid, phi)
    records: list[GrowthRecord] = []
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if data["params"] != fp:
            raise ValueError("checkpoint parameters do not match this scan")
        records = [GrowthRecord.from_json(r) for r in data["records"]]
        if [r.n for r in records] != list(schedule)[: len(records)]:
            raise ValueError("checkpoint schedule does not match this scan")
    for n in list(schedule)[len(records):]:
        md = max_discrepancy(alpha, tau, n, grid, force_python=force_python)
        log_n2 = math.log(n) ** 2
        phi_term = phi(math.log(math.log(n)))
        rec = GrowthRecord(n, md.delta_hat, log_n2, phi.name, phi_term,
                           md.delta_hat / (log_n2 * phi_term), md.argm,
                           md.a, md.x2_raw)
        records.append(rec)
        if checkpoint:
            tmp = checkpoint + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump({"params": fp,
                           "records": [r.to_json() for r in records]}, fh)
            os.replace(tmp, checkpoint)
    return records


@dataclass(frozen=True)
class FitResult:
    max_ratio: float
    median_ratio: float
    slope: float


def fit_rate(records: Sequence[GrowthRecord], phi: PhiFunction) -> FitResult:
    """Ratio statistics under the given phi plus the least-squares slope of
    deltaHat against (log N)^2; invariant under record reordering."""
    if len(records) < 3:
        raise TooFewRecords("need at least 3 records")
    recs = sorted(records, key=lambda r: r.n)
    ratios = [r.delta_hat / (r.log_n2 * phi(math.log(math.log(r.n))))
              for r in recs]
    xs = [r.log_n2 for r in recs]
    ys = [r.delta_hat for r in recs]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx > 0 else 0.0
    srt = sorted(ratios)
    k = len(srt)
    median = srt[k // 2] if k % 2 else 0.5 * (srt[k // 2 - 1] + srt[k // 2])
    return FitResult(max(ratios), median, slope)


# ---- box vs triangle ---------------------------------------------------------


@dataclass(frozen=True)
class BoxTriangleResult:
    """Traces of the box and its two diagonal triangles, the cumulative
    hypotenuse hits, and the pointwise comparison flags."""

    box: DiscrepancyTrace
    lower: DiscrepancyTrace
    upper: DiscrepancyTrace
    hyp_hits: list[int]
    identity_exact: bool
    inequality_ok: bool


def box_vs_triangle(alpha: tuple[FixedUnit, FixedUnit], N: int,
                    x: tuple[int, int], f: int | None = None,
                    a: tuple[FixedUnit, FixedUnit] | None = None
                    ) -> BoxTriangleResult:
    """Box [0,x1) x [0,x2) against its two diagonal triangles at the same
    orbit; x is the raw leg pair (values in (0,1], raws in [1, 2^f]).

    The box membership partitions exactly into lower triangle (strict
    hypotenuse), hypotenuse points, and upper triangle, so
    dBox(m) = dLower(m) + dUpper(m) + hypHits(m) exactly; additionally
    max(|dLower|,|dUpper|) >= |dBox|/2 - 1 is checked pointwise (the unit
    of slack absorbs hypotenuse hits).
    """
    if f is None:
        f = alpha[0].f
    x1, x2 = x
    scale = 1 << f
    if not (1 <= x1 <= scale and 1 <= x2 <= scale):
        raise ValueError("legs must be raw values in [1, 2^f]")
    mask = scale - 1
    if a is None:
        p1 = p2 = 0
    else:
        p1, p2 = a[0].raw, a[1].raw
    s1, s2 = alpha[0].raw, alpha[1].raw
    rhs = x1 * x2
    hb: list[int] = []
    hl: list[int] = []
    hu: list[int] = []
    hh: list[int] = []
    cb = cl = cu = ch = 0
    for _ in range(N):
        p1 = (p1 + s1) & mask
        p2 = (p2 + s2) & mask
        if p1 < x1 and p2 < x2:
            cb += 1
            lhs = p1 * x2 + p2 * x1
            if lhs < rhs:
                cl += 1
            elif lhs == rhs:
                ch += 1
            else:
                cu += 1
        hb.append(cb)
        hl.append(cl)
        hu.append(cu)
        hh.append(ch)
    den = 1 << (2 * f + 1)
    box = DiscrepancyTrace(hb, 2 * x1 * x2, den)
    lower = DiscrepancyTrace(hl, x1 * x2, den)
    upper = DiscrepancyTrace(hu, x1 * x2, den)
    identity = all(hb[m] == hl[m] + hu[m] + hh[m] for m in range(N))
    ineq = all(
        max(abs(lower.d(m)), abs(upper.d(m))) >= abs(box.d(m)) / 2.0 - 1.0
        for m in range(1, N + 1))
    return BoxTriangleResult(box, lower, upper, hh, identity, ineq)
