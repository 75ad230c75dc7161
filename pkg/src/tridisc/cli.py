"""Command-line front end: one subcommand per engine, CSV/JSON emission.

All numeric parameters are validated before dispatch; identical
configurations produce byte-identical output (floats printed with 17
significant digits, no timestamps).  Exit codes: 0 success, 1 engine
failure, 2 usage error.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from typing import Callable, IO

from .arithmetic import DEFAULT_F, FixedUnit, PRESETS, cf_expand, \
    convergent_gap_check, preset
from .orbit import GridSpec, OrbitSpec, Triangle, discrepancy, max_discrepancy
from .experiments import box_vs_triangle, get_phi, growth_scan
from .smalldivisors import FrequencyBox, ShellSpec, cf_harmonic_sum, \
    e_expected, khintchine_lhs, khintchine_solutions, large_term_sum, \
    shell_classify, tail_sums_S1_S2, z_count
from .spectral import DbarResult, QuadGrid, SpectralParams, dbar_quadrature, \
    dbar_truncated, nearest_n3, spectral_rows
from . import _kernels


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _jdump(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_jdump(v)}"
                              for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_jdump(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def _write_csv(out: IO[str], header: list[str], rows) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(row[h]) for h in header) + "\n")


# ---- value parsers -----------------------------------------------------------


def parse_unit(text: str, f: int) -> FixedUnit:
    """Preset name, FixedUnit serialization, or decimal string in [0,1)."""
    text = str(text).strip()
    if text in PRESETS:
        return preset(text, f)
    if text.startswith("f="):
        u = FixedUnit.parse(text)
        if u.f != f:
            raise UsageError(f"value {text!r} has f={u.f}, expected {f}")
        return u
    try:
        return FixedUnit.from_decimal(text, f)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad unit value {text!r}: {exc}") from exc


def parse_unit_pair(text: str, f: int) -> tuple[FixedUnit, FixedUnit]:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise UsageError(f"expected two comma-separated values, got {text!r}")
    return parse_unit(parts[0], f), parse_unit(parts[1], f)


def parse_leg(text: str, f: int) -> int:
    """Leg in (0,1] as a raw value: hex raw, or decimal string."""
    text = str(text).strip()
    if text.startswith("0x"):
        raw = int(text, 16)
    else:
        from fractions import Fraction
        from .arithmetic import _round_half_even

        try:
            fr = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad leg value {text!r}") from exc
        raw = _round_half_even(fr * (1 << f))
    if not 1 <= raw <= (1 << f):
        raise UsageError(f"leg {text!r} outside (0, 1]")
    return raw


def parse_leg_pair(text: str, f: int) -> tuple[int, int]:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise UsageError(f"expected two comma-separated legs, got {text!r}")
    return parse_leg(parts[0], f), parse_leg(parts[1], f)


def _as_int(v, key: str, lo: int | None = None, hi: int | None = None) -> int:
    try:
        n = int(v)
    except (TypeError, ValueError):
        raise UsageError(f"parameter {key!r} must be an integer, got {v!r}")
    if (lo is not None and n < lo) or (hi is not None and n > hi):
        raise UsageError(f"parameter {key!r}={n} out of range")
    return n


def _as_float(v, key: str, lo: float | None = None) -> float:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise UsageError(f"parameter {key!r} must be a number, got {v!r}")
    if lo is not None and x < lo:
        raise UsageError(f"parameter {key!r}={x} out of range")
    return x


# ---- configuration -----------------------------------------------------------

#: per-command parameter tables: name -> (required, default, help)
COMMAND_PARAMS: dict[str, dict[str, tuple[bool, str | None, str]]] = {
    "discrepancy": {
        "alpha": (True, None, "translation vector, e.g. sqrt2m1,sqrt3m1"),
        "a": (False, "0,0", "starting point (default 0,0)"),
        "x": (True, None, "triangle legs x1,x2 in (0,1], decimals or 0x raw"),
        "n": (True, None, "number of orbit points"),
    },
    "maxdisc": {
        "alpha": (True, None, "translation vector"),
        "tau": (True, None, "slope preset or decimal in (0,1]"),
        "n": (True, None, "orbit length"),
        "grid": (False, "16,16,32", "na1,na2,nx grid sizes (default 16,16,32)"),
    },
    "spectral": {
        "alpha": (True, None, "translation vector"),
        "a": (False, "0,0", "starting point"),
        "x": (True, None, "triangle legs"),
        "n": (True, None, "window length N"),
        "k": (True, None, "frequency cutoff K (0 emits header only)"),
        "dbar": (False, "0", "1: emit truncated/quadrature summary JSON"),
        "quadgrid": (False, "9,9,65", "quadrature grid sizes (with dbar=1)"),
    },
    "smalldiv": {
        "task": (True, None,
                 "one of census, largesum, harmonic, khintchine, tails, zcount"),
        "alpha": (False, "sqrt2m1,sqrt3m1", "translation vector"),
        "tau": (False, "golden", "slope"),
        "n": (False, "32", "threshold scale N"),
        "e": (False, "2", "desk-scale exponent standing in for 40"),
        "bound": (False, None, "frequency bound override"),
        "m": (False, "1024", "cutoff M (harmonic, tails)"),
        "phi": (False, "n", "phi name (khintchine)"),
        "c": (False, "4", "constant C (zcount)"),
        "box": (False, "1,33,-2,2", "v1,w1,v2,w2 (zcount)"),
        "far": (False, "1", "restrict box to far divisors (zcount)"),
    },
    "cfrac": {
        "value": (True, None, "unit value to expand"),
        "depth": (False, "30", "number of partial quotients"),
    },
    "growth": {
        "alpha": (False, "sqrt2m1,sqrt3m1", "translation vector"),
        "tau": (False, "golden", "slope"),
        "kmin": (False, "10", "schedule starts at N=2^kmin"),
        "kmax": (False, "20", "schedule ends at N=2^kmax"),
        "grid": (False, "1,1,1", "na1,na2,nx grid (default trivial)"),
        "phi": (False, "n^1.1", "phi name for the ratio column"),
        "checkpoint": (False, None, "JSON checkpoint path (resumable)"),
    },
    "boxcmp": {
        "alpha": (True, None, "translation vector"),
        "x": (True, None, "box sides x1,x2 in (0,1]"),
        "n": (True, None, "orbit length"),
    },
}

GLOBAL_PARAMS = {
    "f": (False, str(DEFAULT_F), "fractional bits (>= 96)"),
    "out": (False, None, "output path (default stdout)"),
    "threads": (False, "1", "grid-cell parallelism (default 1)"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict


def _validate_params(command: str, params: dict) -> dict:
    if command not in COMMAND_PARAMS:
        raise UsageError(f"unknown command {command!r}")
    table = {**COMMAND_PARAMS[command], **GLOBAL_PARAMS}
    clean = {}
    for key, value in params.items():
        if key not in table:
            raise UsageError(f"unknown parameter {key!r} for {command}")
        if value is not None:
            clean[key] = value
    for key, (required, default, _help) in table.items():
        if key not in clean:
            if required:
                raise UsageError(f"missing required parameter {key!r}")
            if default is not None:
                clean[key] = default
    return clean


def parse_config(argv: list[str]) -> RunConfig:
    """Build a validated RunConfig from CLI words or from --config FILE.

    A JSON config file {"command": ..., "params": {...}} is equivalent to
    spelling the same parameters as flags.
    """
    if not argv:
        raise UsageError(
            "usage: tridisc <command> [--key value ...] | tridisc --config FILE\n"
            + _help_text())
    if argv[0] in ("-h", "--help"):
        print(_help_text())
        raise SystemExit(0)
    if argv[0] == "--config":
        if len(argv) != 2:
            raise UsageError("--config takes exactly one file argument")
        try:
            with open(argv[1], "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if set(data) - {"command", "params"}:
            raise UsageError("config keys must be exactly command, params")
        command = data.get("command")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise UsageError("params must be an object")
        return RunConfig(command, _validate_params(command, params))
    command = argv[0]
    params = {}
    i = 1
    while i < len(argv):
        tok = argv[i]
        if not tok.startswith("--"):
            raise UsageError(f"expected --key, got {tok!r}")
        key = tok[2:]
        if i + 1 >= len(argv):
            raise UsageError(f"flag --{key} is missing its value")
        params[key] = argv[i + 1]
        i += 2
    return RunConfig(command, _validate_params(command, params))


def _help_text() -> str:
    lines = ["commands:"]
    for cmd, table in COMMAND_PARAMS.items():
        lines.append(f"  {cmd}")
        for key, (required, default, help_) in {**table, **GLOBAL_PARAMS}.items():
            tag = "required" if required else f"default {default!r}"
            lines.append(f"      --{key:<11} {help_} ({tag})")
    return "\n".join(lines)


# ---- command implementations --------------------------------------------------


def _cmd_discrepancy(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    alpha = parse_unit_pair(p["alpha"], f)
    a = parse_unit_pair(p["a"], f)
    x1, x2 = parse_leg_pair(p["x"], f)
    n = _as_int(p["n"], "n", lo=0)
    t = Triangle(x1, x2, f)
    tr = discrepancy(OrbitSpec(alpha, a, n), t)
    vol = tr.vol_float
    rows = ({"m": m, "hits": h, "D": float(h) - float(m) * vol}
            for m, h in enumerate(tr.hits, start=1))
    _write_csv(out, ["m", "hits", "D"], rows)


def _cmd_maxdisc(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    alpha = parse_unit_pair(p["alpha"], f)
    tau = parse_unit(p["tau"], f)
    n = _as_int(p["n"], "n", lo=1)
    g = [_as_int(v, "grid", lo=1) for v in str(p["grid"]).split(",")]
    if len(g) != 3:
        raise UsageError("grid must be na1,na2,nx")
    threads = _as_int(p["threads"], "threads", lo=1)
    md = max_discrepancy(alpha, tau, n, GridSpec(*g), threads=threads)
    out.write(_jdump({
        "N": n,
        "maxAbsD": md.delta_hat,
        "argm": md.argm,
        "a": [md.a[0].to_str(), md.a[1].to_str()],
        "x2": f"{md.x2_raw:#x}",
    }) + "\n")


def _cmd_spectral(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    alpha = parse_unit_pair(p["alpha"], f)
    a = parse_unit_pair(p["a"], f)
    x1, x2 = parse_leg_pair(p["x"], f)
    n = _as_int(p["n"], "n", lo=1)
    k = _as_int(p["k"], "k", lo=0)
    sp = SpectralParams(Triangle(x1, x2, f), a, alpha, n, k)
    if _as_int(p["dbar"], "dbar", lo=0, hi=1):
        qg = [_as_int(v, "quadgrid", lo=1) for v in str(p["quadgrid"]).split(",")]
        if len(qg) != 3:
            raise UsageError("quadgrid must be q1,q2,q3")
        res = dbar_truncated(sp)
        quad = dbar_quadrature(sp, QuadGrid(*qg))
        out.write(_jdump({
            "N": n, "K": k,
            "dbarTruncated": res.value,
            "imagResidual": res.imag_residual,
            "smallDivisorCount": res.small_divisor_count,
            "tailBound": res.tail_bound,
            "dbarQuadrature": quad,
        }) + "\n")
        return
    _write_csv(out, ["n1", "n2", "n3", "reF1", "imF1", "reF2", "imF2",
                     "divisorProduct"], spectral_rows(sp))


def _cmd_smalldiv(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    task = str(p["task"])
    alpha = parse_unit_pair(p["alpha"], f)
    tau = parse_unit(p["tau"], f)
    n = _as_int(p["n"], "n", lo=2)
    e = _as_float(p["e"], "e", lo=1e-9)
    if task == "census":
        bound = _as_int(p.get("bound", 64), "bound", lo=1, hi=2048)
        spec = ShellSpec(n, e)
        scale = 1 << f

        def rows():
            for n1 in range(-bound, bound + 1):
                for n2 in range(-bound, bound + 1):
                    if n1 == 0 and n2 == 0:
                        continue
                    n3 = nearest_n3(n1, n2, alpha)
                    w = n1 * alpha[0].raw + n2 * alpha[1].raw - (n3 << f)
                    d = abs(n1 * tau.raw - n2 * scale)
                    divprod = (max(1, abs(n1))
                               * _kernels.to_float128(d << (128 - f))
                               * _kernels.to_float128(abs(w) << (128 - f)))
                    yield {"n1": n1, "n2": n2, "n3": n3,
                           "divisorProduct": divprod,
                           "shell": shell_classify((n1, n2, n3), alpha, tau, spec)}

        _write_csv(out, ["n1", "n2", "n3", "divisorProduct", "shell"], rows())
    elif task == "largesum":
        bound = p.get("bound")
        nb = _as_int(bound, "bound", lo=1) if bound is not None else None
        s, c = large_term_sum(alpha, tau, n, e, n_bound=nb)
        out.write(_jdump({"N": n, "E": e, "bound": nb, "sum": s, "count": c})
                  + "\n")
    elif task == "harmonic":
        m = _as_int(p["m"], "m", lo=1)
        out.write(_jdump({"M": m, "sum": cf_harmonic_sum(tau, m)}) + "\n")
    elif task == "khintchine":
        bound = _as_int(p.get("bound", 1000), "bound", lo=1)
        phi = get_phi(str(p["phi"]))
        sols = khintchine_solutions(alpha, phi, bound)
        scale = 1 << f

        def rows():
            for n1, n2 in sols:
                v = (n1 * alpha[0].raw + n2 * alpha[1].raw) % scale
                dist = _kernels.to_float128(min(v, scale - v) << (128 - f))
                yield {"n1": n1, "n2": n2,
                       "lhs": khintchine_lhs(n1, n2, dist, phi)}

        _write_csv(out, ["n1", "n2", "lhs"], rows())
    elif task == "tails":
        m = _as_int(p["m"], "m", lo=2)
        s1, s2 = tail_sums_S1_S2(alpha, tau, m)
        out.write(_jdump({"M": m, "s1": s1, "s2": s2}) + "\n")
    elif task == "zcount":
        c = _as_float(p["c"], "c", lo=1.0)
        parts = [float(v) for v in str(p["box"]).split(",")]
        if len(parts) != 4:
            raise UsageError("box must be v1,w1,v2,w2")
        far = bool(_as_int(p["far"], "far", lo=0, hi=1))
        box = FrequencyBox(parts[0], parts[1], parts[2], parts[3], tau, far)
        out.write(_jdump({
            "z": z_count(alpha, tau, c, box, "low"),
            "zHigh": z_count(alpha, tau, c, box, "high"),
            "zMiddle": z_count(alpha, tau, c, box, "middle"),
            "e": e_expected(tau, c, box),
        }) + "\n")
    else:
        raise UsageError(f"unknown task {task!r}")


def _cmd_cfrac(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    u = parse_unit(p["value"], f)
    depth = _as_int(p["depth"], "depth", lo=1)
    cf = cf_expand(u, depth)
    checks = convergent_gap_check(cf, u)

    def rows():
        for j, (a, (pj, qj)) in enumerate(zip(cf.quotients, cf.convergents)):
            yield {"j": j + 1, "a": a, "p": pj, "q": qj,
                   "gapOk": checks[j] if j < len(checks) else ""}

    _write_csv(out, ["j", "a", "p", "q", "gapOk"], rows())


def _cmd_growth(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    alpha = parse_unit_pair(p["alpha"], f)
    tau = parse_unit(p["tau"], f)
    kmin = _as_int(p["kmin"], "kmin", lo=1)
    kmax = _as_int(p["kmax"], "kmax", lo=kmin)
    g = [_as_int(v, "grid", lo=1) for v in str(p["grid"]).split(",")]
    if len(g) != 3:
        raise UsageError("grid must be na1,na2,nx")
    phi = get_phi(str(p["phi"]))
    schedule = [1 << k for k in range(kmin, kmax + 1)]
    records = growth_scan(alpha, tau, schedule, GridSpec(*g), phi,
                          checkpoint=p.get("checkpoint"))

    def rows():
        for r in records:
            yield {"N": r.n, "deltaHat": r.delta_hat, "logN2": r.log_n2,
                   "phiName": r.phi_name, "phiTerm": r.phi_term,
                   "ratio": r.ratio, "m": r.argm,
                   "a1": r.a[0].to_str(), "a2": r.a[1].to_str(),
                   "x2": f"{r.x2_raw:#x}"}

    _write_csv(out, ["N", "deltaHat", "logN2", "phiName", "phiTerm", "ratio",
                     "m", "a1", "a2", "x2"], rows())


def _cmd_boxcmp(p: dict, out: IO[str]) -> None:
    f = _as_int(p["f"], "f", lo=96)
    alpha = parse_unit_pair(p["alpha"], f)
    x1, x2 = parse_leg_pair(p["x"], f)
    n = _as_int(p["n"], "n", lo=1)
    res = box_vs_triangle(alpha, n, (x1, x2), f)

    def rows():
        for m in range(1, n + 1):
            yield {"m": m,
                   "hitsBox": res.box.hits[m - 1],
                   "hitsLower": res.lower.hits[m - 1],
                   "hitsUpper": res.upper.hits[m - 1],
                   "hypHits": res.hyp_hits[m - 1],
                   "dBox": res.box.d(m),
                   "dLower": res.lower.d(m),
                   "dUpper": res.upper.d(m)}

    _write_csv(out, ["m", "hitsBox", "hitsLower", "hitsUpper", "hypHits",
                     "dBox", "dLower", "dUpper"], rows())


_DISPATCH: dict[str, Callable[[dict, IO[str]], None]] = {
    "discrepancy": _cmd_discrepancy,
    "maxdisc": _cmd_maxdisc,
    "spectral": _cmd_spectral,
    "smalldiv": _cmd_smalldiv,
    "cfrac": _cmd_cfrac,
    "growth": _cmd_growth,
    "boxcmp": _cmd_boxcmp,
}


def run(config: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    params = config.params
    path = params.get("out")
    try:
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                _DISPATCH[config.command](params, fh)
        else:
            _DISPATCH[config.command](params, sys.stdout)
    except UsageError:
        raise
    except Exception as exc:  # engine failure -> one-line diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        config = parse_config(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
