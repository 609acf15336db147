"""Command-line driver: ``hankel-asym <det|compare|fredholm|constants|selfcheck>``.

Exit codes: 0 success, 1 selfcheck failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
from mpmath import mpf

from .asym import C_KEYS, D_KEYS, bessel_det_asym, c_constants, predict_log_det
from .bigreal import Precision, integrate_semi_infinite, required_precision
from .errors import ConvergenceError, DomainError, NumericalError, ValidationError
from .fredholm import DEFAULT_XMAX, KernelSpec, NystromGrid, cd_integral_identity_residual, hs_distance, nystrom_log_det
from .hankel import lemma1_residual, ortho_precision, log_An_inv, log_det_hankel, log_det_ortho
from .specfun import LaguerreBasis, barnes_log_g_asymptotic, barnes_log_g_product, barnes_log_g_recurrence
from .weights import WeightSpec

DIGITS = 30
AUTO_LIMIT = 48
CONSTANT_BITS = 128

EXIT_OK, EXIT_SELFCHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COLUMNS = {
    "det": ("n", "log_det_hankel", "log_det_ortho", "log_An_inv", "lemma1_residual", "wall_time_ms"),
    "compare": ("n", "exact_log_det", "predicted", "residual"),
    "fredholm": ("n", "logdet_laguerre", "logdet_bessel", "bessel_asym", "hs_distance"),
    "constants": ("name", "value"),
}


class ConfigError(ValidationError):
    pass


def fmt(v) -> str:
    """Decimal string with DIGITS significant digits."""
    if isinstance(v, int):
        return str(v)
    if not isinstance(v, mpmath.mpf):
        # floats are exact in binary; never round an mpf to the global precision
        with mpmath.workprec(64):
            v = mpf(v)
    return mpmath.nstr(v, DIGITS, strip_zeros=False, min_fixed=-5, max_fixed=8)


@dataclass
class RunConfig:
    weight: WeightSpec
    n_list: list
    bits: Optional[int] = None
    quad_nodes: Optional[int] = None
    x_max: float = DEFAULT_XMAX
    output: str = "csv"
    out_path: Optional[str] = None
    allow_large: bool = False
    jobs: int = 1
    timing: bool = True
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.n_list:
            raise ConfigError("n list must be non-empty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ConfigError("orders must be positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n list must be strictly increasing")
        if self.bits is not None and self.bits < 64:
            raise ConfigError("explicit --bits must be >= 64")
        if self.output not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.quad_nodes is not None and self.quad_nodes < 2:
            raise ConfigError("--quad-nodes must be >= 2")
        if self.x_max <= 0:
            raise ConfigError("--xmax must be positive")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")

    def precision_for(self, n: int) -> Precision:
        return Precision(self.bits) if self.bits is not None else required_precision(n, self.weight.nu)

    def check_auto_range(self):
        if self.bits is None and not self.allow_large and max(self.n_list) > AUTO_LIMIT:
            raise ConfigError(
                f"n > {AUTO_LIMIT} under auto precision is very expensive; pass --allow-large or --bits"
            )


def parse_weight(text: str) -> WeightSpec:
    """Inline JSON or a path to a JSON file."""
    if text is None:
        raise ConfigError("--weight is required")
    stripped = text.strip()
    if not stripped.startswith("{"):
        try:
            with open(text) as fh:
                stripped = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read weight file {text!r}: {exc}") from exc
    return WeightSpec.from_json(stripped)


def parse_n_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --n list {text!r}") from exc


def parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in C_KEYS + D_KEYS:
            raise ConfigError(f"bad --override {item!r}; use e.g. c2=-1")
        try:
            out[key] = mpf(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad --override value {value!r}") from exc
    return out


# Row workers are module-level so they can run in worker processes.


def _det_row(spec_json: str, n: int, bits: Optional[int]) -> dict:
    spec = WeightSpec.from_json(spec_json)
    prec = Precision(bits) if bits is not None else required_precision(n, spec.nu)
    t0 = time.perf_counter()
    hank = log_det_hankel(spec, n, prec)
    orth = log_det_ortho(spec, n, ortho_precision(prec))
    an_inv = log_An_inv(spec.nu, n, prec)
    with prec.workprec(16):
        resid = abs(orth - (hank - an_inv))
    ms = (time.perf_counter() - t0) * 1000
    return {
        "n": n,
        "log_det_hankel": fmt(hank),
        "log_det_ortho": fmt(orth),
        "log_An_inv": fmt(an_inv),
        "lemma1_residual": fmt(resid),
        "wall_time_ms": f"{ms:.1f}",
        "_bits": prec.bits,
    }


def _exact_row(spec_json: str, n: int, bits: Optional[int]) -> tuple:
    spec = WeightSpec.from_json(spec_json)
    prec = Precision(bits) if bits is not None else required_precision(n, spec.nu)
    return n, log_det_hankel(spec, n, prec), prec.bits


def _fredholm_row(spec_json: str, n: int, m: Optional[int], x_max: float) -> dict:
    spec = WeightSpec.from_json(spec_json)
    grid = NystromGrid.for_order(n, x_max, m)
    lag = nystrom_log_det(KernelSpec("laguerre_cd", n, spec), grid)
    bes = nystrom_log_det(KernelSpec("bessel_compressed", n, spec), grid)
    return {
        "n": n,
        "logdet_laguerre": fmt(lag),
        "logdet_bessel": fmt(bes),
        "bessel_asym": fmt(bessel_det_asym(spec, n, CONSTANT_BITS)),
        "hs_distance": fmt(hs_distance(n, spec, grid)),
        "_m": grid.m,
    }


def _map(fn: Callable, args: list, jobs: int) -> list:
    """Apply ``fn`` to argument tuples, keeping the input order."""
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    # mpmath precision is process-global, so parallelism uses processes.
    with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
        return list(pool.map(fn, *zip(*args)))


def _meta(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "weight": cfg.weight.to_dict(),
        "precision": "auto" if cfg.bits is None else cfg.bits,
        "digits": DIGITS,
    }


def cmd_det(cfg: RunConfig):
    cfg.check_auto_range()
    spec_json = cfg.weight.to_json()
    rows = _map(_det_row, [(spec_json, n, cfg.bits) for n in cfg.n_list], cfg.jobs)
    meta = _meta(cfg, "det")
    meta["bits"] = {str(r["n"]): r.pop("_bits") for r in rows}
    if not cfg.timing:
        for r in rows:
            r["wall_time_ms"] = "0"
    return meta, rows


def _constants(cfg: RunConfig):
    consts = c_constants(cfg.weight, CONSTANT_BITS)
    if cfg.overrides:
        consts = consts.with_overrides(**cfg.overrides)
    return consts


def cmd_compare(cfg: RunConfig):
    cfg.check_auto_range()
    if min(cfg.n_list) < 2:
        raise ConfigError("compare needs every n >= 2")
    consts = _constants(cfg)
    exact = _map(_exact_row, [(cfg.weight.to_json(), n, cfg.bits) for n in cfg.n_list], cfg.jobs)
    rows, bits = [], {}
    for n, value, b in exact:
        pred = predict_log_det(consts, n)
        with mpmath.workprec(max(b, consts.bits) + 16):
            resid = value - pred
        rows.append({"n": n, "exact_log_det": fmt(value), "predicted": fmt(pred), "residual": fmt(resid)})
        bits[str(n)] = b
    meta = _meta(cfg, "compare")
    meta["bits"] = bits
    meta["constants_bits"] = consts.bits
    meta["constants"] = consts.to_dict(DIGITS)
    return meta, rows


def cmd_fredholm(cfg: RunConfig):
    spec_json = cfg.weight.to_json()
    rows = _map(_fredholm_row, [(spec_json, n, cfg.quad_nodes, cfg.x_max) for n in cfg.n_list], cfg.jobs)
    meta = _meta(cfg, "fredholm")
    meta["x_max"] = cfg.x_max
    meta["grid_nodes"] = {str(r["n"]): r.pop("_m") for r in rows}
    meta["tier"] = "float64"
    return meta, rows


def cmd_constants(cfg: RunConfig):
    consts = _constants(cfg)
    meta = _meta(cfg, "constants")
    meta["constants_bits"] = consts.bits
    rows = [{"name": k, "value": v} for k, v in consts.to_dict(DIGITS).items()]
    return meta, rows


# Self-check suite.  Each check returns (passed, detail).


def _check_barnes():
    prec = Precision(128)
    worst = max(
        abs(barnes_log_g_product(z, prec) - barnes_log_g_recurrence(z, prec)) for z in (mpf("0.3"), mpf("1.7"), mpf("3.25"))
    )
    rel = [
        abs(barnes_log_g_asymptotic(n, 0, prec) / barnes_log_g_recurrence(n, prec) - 1) for n in (10, 50)
    ]
    ok = worst < mpf("1e-25") and rel[1] < mpf("1e-3") and rel[1] < rel[0]
    return ok, {"product_vs_recurrence": fmt(worst), "asym_rel_10": fmt(rel[0]), "asym_rel_50": fmt(rel[1])}


def _check_cd():
    worst = max(
        cd_integral_identity_residual(n, nu, x, y)
        for n in (1, 3, 6)
        for nu in (0, 0.5)
        for x, y in ((0.4, 2.3), (5.0, 1.1))
    )
    return worst < mpf("1e-12"), {"max_residual": fmt(worst)}


def _check_lemma1():
    specs = [
        WeightSpec(0.5, "rational_exp", {"alpha": 1.0}),
        WeightSpec(0.0, "gauss_exp", {"theta": 0.5}),
    ]
    worst = max(lemma1_residual(s, 5) for s in specs)
    return worst < mpf("1e-20"), {"max_residual": fmt(worst)}


def _check_orthonormality():
    prec = Precision(128)
    nu, deg = 0.5, 5
    basis = LaguerreBasis(nu, deg, prec)

    def f(x):
        if x == 0:
            return [mpf(0)] * ((deg + 1) * (deg + 2) // 2)
        p = basis.values(x, deg)
        w = mpmath.power(x, nu) * mpmath.exp(-x)
        return [w * p[i] * p[j] for i in range(deg + 1) for j in range(i, deg + 1)]

    vals = integrate_semi_infinite(f, 1, prec, endpoint_exponent=nu)
    pairs = [(i, j) for i in range(deg + 1) for j in range(i, deg + 1)]
    worst = max(abs(v - (1 if i == j else 0)) for v, (i, j) in zip(vals, pairs))
    return worst < mpf("1e-30"), {"max_gram_error": fmt(worst)}


def _check_doubling():
    spec = WeightSpec(0.5, "rational_exp", {"alpha": 1.0})
    a = log_det_hankel(spec, 6, Precision(256))
    b = log_det_hankel(spec, 6, Precision(512))
    c = c_constants(WeightSpec(0.0, "gauss_exp", {"theta": 0.5}), 128, "quadrature").c7
    d = c_constants(WeightSpec(0.0, "gauss_exp", {"theta": 0.5}), 256, "quadrature").c7
    rel = max(abs(a - b) / abs(b), abs(c - d) / abs(d))
    return rel < mpf("1e-10"), {"max_relative_change": fmt(rel)}


def _compare_residuals(overrides: dict):
    spec = WeightSpec(0.0, "gauss_exp", {"theta": 0.5})
    consts = c_constants(spec, CONSTANT_BITS)
    if overrides:
        consts = consts.with_overrides(**overrides)
    out = []
    for n in (4, 8, 16):
        prec = required_precision(n)
        exact = log_det_hankel(spec, n, prec)
        with prec.workprec(16):
            out.append(exact - predict_log_det(consts, n))
    return out


def run_selfcheck(overrides: Optional[dict] = None) -> dict:
    """Run every check once; ``overrides`` corrupts constants for negative controls."""
    overrides = overrides or {}
    checks = [
        ("barnes_consistency", _check_barnes),
        ("cd_identity", _check_cd),
        ("lemma1", _check_lemma1),
        ("orthonormality", _check_orthonormality),
        ("precision_doubling", _check_doubling),
    ]
    report = []
    for name, fn in checks:
        report.append(_run_check(name, fn))

    def compare():
        res = [abs(r) for r in _compare_residuals(overrides)]
        ok = res[2] < res[1] < res[0] and res[2] < mpf("0.05")
        return ok, {"abs_residuals_n4_8_16": [fmt(r) for r in res]}

    report.append(_run_check("compare_route", compare))
    return {"passed": all(c["passed"] for c in report), "checks": report}


def _run_check(name, fn) -> dict:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except (NumericalError, ConvergenceError, DomainError, ArithmeticError) as exc:
        ok, detail = False, {"error": str(exc)}
    return {"name": name, "passed": bool(ok), "detail": detail, "seconds": round(time.perf_counter() - t0, 2)}


def render(meta: dict, rows: list, columns, output: str) -> str:
    if output == "json":
        clean = [{k: (str(v) if not isinstance(v, str) else v) for k, v in r.items()} for r in rows]
        return json.dumps({"meta": meta, "rows": clean}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([r[c] for c in columns])
    return buf.getvalue()


def _emit(text: str, out_path: Optional[str], meta: Optional[dict] = None, output: str = "csv"):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
        if meta is not None and output == "csv":
            with open(out_path + ".meta.json", "w") as fh:
                json.dump(meta, fh, indent=2)
    else:
        sys.stdout.write(text)
        if meta is not None and output == "csv":
            sys.stderr.write(json.dumps(meta) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hankel-asym", description="Hankel determinants of Laguerre-type weights.")
    p.add_argument("command", choices=("det", "compare", "fredholm", "constants", "selfcheck"))
    p.add_argument("--weight", help="weight spec as inline JSON or a path to a JSON file")
    p.add_argument("--n", default=None, help="comma-separated, strictly increasing orders")
    p.add_argument("--bits", type=int, default=None, help="explicit working precision (default: auto per n)")
    p.add_argument("--quad-nodes", type=int, default=None, help="Nystrom grid size (fredholm)")
    p.add_argument("--xmax", type=float, default=DEFAULT_XMAX, help="Nystrom truncation point (fredholm)")
    p.add_argument("--format", dest="output", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--allow-large", action="store_true", help=f"permit n > {AUTO_LIMIT} under auto precision")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent orders")
    p.add_argument("--no-timing", action="store_true", help="write 0 in the wall_time_ms column")
    p.add_argument("--override", action="append", help="replace a constant, e.g. c2=-1 (negative controls)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = parse_overrides(args.override)
        if args.command == "selfcheck":
            report = run_selfcheck(overrides)
            _emit(json.dumps(report, indent=2) + "\n", args.out)
            return EXIT_OK if report["passed"] else EXIT_SELFCHECK
        weight = parse_weight(args.weight)
        if args.command == "constants":
            n_list = [1]
        elif args.n is None:
            raise ConfigError("--n is required")
        else:
            n_list = parse_n_list(args.n)
        cfg = RunConfig(
            weight=weight,
            n_list=n_list,
            bits=args.bits,
            quad_nodes=args.quad_nodes,
            x_max=args.xmax,
            output=args.output,
            out_path=args.out,
            allow_large=args.allow_large,
            jobs=args.jobs,
            timing=not args.no_timing,
            overrides=overrides,
        )
        command = {"det": cmd_det, "compare": cmd_compare, "fredholm": cmd_fredholm, "constants": cmd_constants}
        meta, rows = command[args.command](cfg)
        _emit(render(meta, rows, COLUMNS[args.command], cfg.output), cfg.out_path, meta, cfg.output)
        return EXIT_OK
    except (ValidationError, DomainError) as exc:
        print(f"hankel-asym: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError, ArithmeticError) as exc:
        print(f"hankel-asym: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
