"""Command-line front end.

Every subcommand writes CSV: ``#`` metadata lines first, then a header row,
then data rows with numbers printed to 17 significant digits.  Exit status
is 0 on success, 1 when a numeric check fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np

from . import __version__, arith, numkernel, summation
from .errors import DomainError, MaassumError
from .forms import FormSpec, eisenstein_p_form, zagier_form
from .numkernel import PrecisionConfig

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

FIGURE_RHOS = {
    1: (0.5 + 1e-5, 1.0, 1.5, 2.0),
    2: (1.5, 2.0, 5.0, 10.0),
    3: (0.0, -0.1, -0.5),
}
# default x grids; the half offset keeps clear of integers
FIGURE_GRIDS = {
    1: (10.5, 10000.5, 60, True),
    2: (10.5, 10000.5, 60, True),
    3: (10.5, 2000.5, 60, True),
}
DEFAULT_VERIFY_TOL = {"zagier": 1e-4, "eisenstein-p": 1e-3}
CONDITIONAL_TOL = 1e-2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    form: str
    k: int
    digits: int
    out: str | None

    def precision(self) -> PrecisionConfig:
        return PrecisionConfig(working_digits=self.digits)


# ----------------------------------------------------------------- output


def rho_label(r) -> str:
    """Column name with the shortest round-trip form of rho (rho=-0.1, rho=2)."""
    r = float(r)
    return f"rho={int(r)}" if r.is_integer() else f"rho={r!r}"


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def split_complex(v) -> tuple[float, float]:
    c = complex(v)
    return c.real, c.imag


class CsvOut:
    """Collects metadata and rows, then writes them in one piece."""

    def __init__(self, meta: dict):
        self.meta = meta
        self.header: list[str] = []
        self.rows: list[list] = []

    def render(self) -> str:
        buf = io.StringIO()
        items = " ".join(f"{k}={v}" for k, v in self.meta.items())
        buf.write(f"# maassum {__version__} {items}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    def write(self, path: str | None):
        text = self.render()
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)


@lru_cache(maxsize=None)
def build_form(name: str, k: int, digits: int) -> FormSpec:
    cfg = PrecisionConfig(working_digits=digits)
    if name == "zagier":
        return zagier_form(cfg)
    return eisenstein_p_form(k, cfg)


def form_meta(form: FormSpec, cfg: PrecisionConfig, sub: str, extra: dict | None = None) -> dict:
    meta = {
        "subcommand": sub,
        "form": form.name,
        "k": str(form.k),
        "N": form.N,
        "digits": cfg.working_digits,
        "quad_tol": f"{cfg.quad_tol:g}",
        "series_tol": f"{cfg.series_tol:g}",
    }
    pol = summation.TailPolicy()
    meta["policy"] = (f"cap={pol.cap},conditional_terms={pol.conditional_terms},"
                      f"averaging_passes={pol.averaging_passes}")
    if extra:
        meta.update(extra)
    return meta


def x_grid(args, default=None) -> list[float]:
    if getattr(args, "x", None):
        xs = list(args.x)
    else:
        start, stop, points, log = default or (None, None, None, False)
        start = args.x_start if args.x_start is not None else start
        stop = args.x_stop if args.x_stop is not None else stop
        points = args.x_points if args.x_points is not None else points
        log = args.x_log or log
        if start is None or stop is None or points is None:
            raise UsageError("give --x or all of --x-start, --x-stop, --x-points")
        if not (stop > start > 0):
            raise UsageError("the grid needs stop > start > 0")
        if points < 1:
            raise UsageError("--x-points must be positive")
        if points == 1:
            xs = [float(start)]
        elif log:
            xs = list(np.geomspace(start, stop, points))
        else:
            xs = list(np.linspace(start, stop, points))
    if not xs or any(not x > 0 for x in xs):
        raise UsageError("x values must be positive")
    return [float(x) for x in xs]


# ------------------------------------------------------------ subcommands


def cmd_hurwitz(args, rc: RunConfig) -> int:
    lo, hi = args.min, args.max
    if lo < 0 or hi < lo:
        raise UsageError("need 0 <= --min <= --max")
    out = CsvOut({"subcommand": "hurwitz", "min": lo, "max": hi})
    out.header = ["n", "numerator", "denominator", "hurwitz_kronecker_residual"]
    table = arith.hurwitz_table(4 * max(hi, 1))
    bad = 0
    for n in range(lo, hi + 1):
        h = table[n]
        # the relation is stated for n >= 1; row 0 carries an empty residual
        res = arith.hurwitz_kronecker_check(n, table) if n >= 1 else None
        if res is not None and res != 0:
            bad += 1
        out.rows.append([n, h.numerator, h.denominator, None if res is None else str(res)])
    out.write(rc.out)
    return EXIT_FAIL if bad else EXIT_OK


def _identity_row(task):
    name, k, digits, rho, x, experimental = task
    form = build_form(name, k, digits)
    cfg = PrecisionConfig(working_digits=digits)
    params = summation.SummationParams(rho, x, cfg, experimental=experimental)
    try:
        rep = summation.verify_identity(form, params)
    except DomainError as exc:
        if experimental:
            return {"rho": rho, "x": x, "error": type(exc).__name__}
        raise
    return {"rho": rho, "x": x, "report": rep}


def _run_tasks(fn, tasks: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves input order
        return list(pool.map(fn, tasks))


def cmd_verify(args, rc: RunConfig) -> int:
    form = build_form(rc.form, rc.k, rc.digits)
    cfg = rc.precision()
    rhos = args.rho or [2.0]
    xs = x_grid(args, (20.5, 20.5, 1, False))
    tol = args.tol if args.tol is not None else DEFAULT_VERIFY_TOL[rc.form]
    tasks = [(rc.form, rc.k, rc.digits, r, x, args.experimental) for r in rhos for x in xs]
    results = _run_tasks(_identity_row, tasks, args.jobs)
    out = CsvOut(form_meta(form, cfg, "verify", {"tol": f"{tol:g}", "experimental": int(args.experimental)}))
    cols = ["lhs_weighted", "lhs_nonholo", "residual_q", "rhs_holo", "rhs_nonholo", "residual"]
    out.header = (["rho", "x"] + [f"{c}_{p}" for c in cols for p in ("re", "im")]
                  + ["rel_residual", "converged", "conditional", "experimental", "status"])
    failed = 0
    for res in results:
        rho, x = res["rho"], res["x"]
        if "error" in res:
            out.rows.append([rho, x] + [math.nan] * 2 * len(cols)
                            + [math.nan, False, False, True, "experimental:" + res["error"]])
            continue
        rep = res["report"]
        d = rep.diagnostics
        vals = [rep.lhs_weighted, rep.lhs_nonholo, rep.residual_q, rep.rhs_holo, rep.rhs_nonholo, rep.residual]
        experimental = args.experimental and not summation.rho_admissible(form, rho)
        limit = max(tol, CONDITIONAL_TOL) if d["conditional"] else tol
        if experimental:
            status = "experimental"
        elif rep.rel_residual < limit:
            status = "pass"
        else:
            status = "fail"
            failed += 1
        flat = [p for v in vals for p in split_complex(v)]
        out.rows.append([rho, x] + flat + [rep.rel_residual, d["converged"], d["conditional"],
                                           experimental, status])
    out.write(rc.out)
    return EXIT_FAIL if failed else EXIT_OK


def _figure_point(task):
    which, rho, x, digits = task
    form = build_form("zagier", 0, digits)
    cfg = PrecisionConfig(working_digits=digits)
    try:
        if which == 2:
            return summation.error_term_ratio(form, rho, x, cfg)
        val = summation.asymptotic_ratio(form, rho, x, cfg, include_nonholo=False, check_range=False)
        return val.real
    except DomainError:
        return math.nan


def cmd_figure(args, rc: RunConfig) -> int:
    which = args.which
    rhos = FIGURE_RHOS[which]
    xs = x_grid(args, FIGURE_GRIDS[which])
    cfg = rc.precision()
    form = build_form("zagier", 0, rc.digits)
    tasks = [(which, r, x, rc.digits) for x in xs for r in rhos]
    vals = _run_tasks(_figure_point, tasks, args.jobs)
    kind = "error_term_ratio" if which == 2 else "asymptotic_ratio"
    extra = {"figure": which, "quantity": kind}
    if which == 3:
        extra["experimental"] = 1
    out = CsvOut(form_meta(form, cfg, "figure", extra))
    out.header = ["x"] + [rho_label(r) for r in rhos]
    m = len(rhos)
    for i, x in enumerate(xs):
        out.rows.append([x] + vals[i * m:(i + 1) * m])
    out.write(rc.out)
    return EXIT_OK


def cmd_converse(args, rc: RunConfig) -> int:
    form = build_form(rc.form, rc.k, rc.digits)
    cfg = rc.precision()
    ys = args.y or [0.5, 1.0, 2.0, 4.0]
    if any(not y > 0 for y in ys):
        raise UsageError("y values must be positive")
    tol = args.tol if args.tol is not None else 1e-8
    out = CsvOut(form_meta(form, cfg, "converse", {"tol": f"{tol:g}"}))
    out.header = ["y", "abs_residual", "scale", "rel_residual", "status"]
    failed = 0
    for y in ys:
        r = summation.converse_check(form, y, cfg)
        a = abs(complex(r.value))
        rel = a / r.err if r.err > 0 else a
        ok = rel < tol
        failed += not ok
        out.rows.append([y, a, r.err, rel, "pass" if ok else "fail"])
    out.write(rc.out)
    return EXIT_FAIL if failed else EXIT_OK


def special_selftest(cfg: PrecisionConfig) -> list[tuple[str, float, float]]:
    """(family, max residual, tolerance) for the special-function oracle grid."""
    rows = []
    worst = 0.0
    for nu in (-0.5, 0.5, 1.0, 2.5):
        for s in (0.6, 1.0, 2.0, 5.0, 10.0):
            w0 = numkernel.w_function(nu, s, cfg).value
            w1 = numkernel.w_function(nu, s + 1, cfg).value
            rhs = mp.power(2, nu) * mp.gamma(s + nu)
            worst = max(worst, float(abs(s * w0 - rhs + w1) / abs(rhs)))
    rows.append(("w_recursion", worst, 1e-10))
    worst = 0.0
    for nu in (-0.5, 0.5, 1.0, 2.5):
        for s in (0.6, 1.0, 2.0, 5.0):
            if not s > max(-nu, 0) + 0.1:
                continue
            a = numkernel.w_function(nu, s, cfg).value
            b = numkernel.w_defining_integral(nu, s, cfg).value
            worst = max(worst, float(abs(a - b) / abs(a)))
    rows.append(("w_closed_vs_integral", worst, 1e-8))
    worst = 0.0
    for z in (0.5, 2.0, 7.5, 30.0, 80.0, 200.0):
        zm = mp.mpf(z)
        amp = mp.sqrt(2 / (mp.pi * zm))
        half = amp * mp.sin(zm)
        three = amp * (mp.sin(zm) / zm - mp.cos(zm))
        worst = max(worst, float(abs(numkernel.bessel_j(0.5, z, cfg).value - half)),
                    float(abs(numkernel.bessel_j(1.5, z, cfg).value - three)))
    rows.append(("bessel_half_integer", worst, 1e-12))
    worst = 0.0
    for a in (-0.5, 0.5, 1.5):
        for x in (0.1, 1.0, 10.0):
            v = numkernel.upper_incomplete_gamma(a, x, cfg).value
            ref = mp.quad(lambda t: mp.power(t, a - 1) * mp.exp(-t), [x, x + 1, mp.inf])
            worst = max(worst, float(abs(v - ref) / abs(ref)))
    rows.append(("upper_incomplete_gamma", worst, 1e-10))
    return rows


def cmd_special(args, rc: RunConfig) -> int:
    cfg = rc.precision()
    out = CsvOut({"subcommand": "special-selftest", "digits": cfg.working_digits})
    out.header = ["family", "max_residual", "tolerance", "status"]
    failed = 0
    for fam, worst, tol in special_selftest(cfg):
        ok = worst < tol
        failed += not ok
        out.rows.append([fam, worst, tol, "pass" if ok else "fail"])
    out.write(rc.out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_dump(args, rc: RunConfig) -> int:
    form = build_form(rc.form, rc.k, rc.digits)
    cfg = rc.precision()
    nmax = args.max
    if nmax < 0:
        raise UsageError("--max must be non-negative")
    ph = complex(form.fricke_phase)
    out = CsvOut(form_meta(form, cfg, "dump-coeffs",
                           {"fricke_phase": f"{ph.real:.17g}{ph.imag:+.17g}j"}))
    keys = ["a+", "a-", "b+", "b-"]
    out.header = ["n"] + [f"{k}_{p}" for k in keys for p in ("re", "im")]
    consts = [form.a0_plus, form.a0_minus, form.b0_plus, form.b0_minus]
    out.rows.append([0] + [p for c in consts for p in split_complex(c)])
    gens = [form.a_plus, form.a_minus, form.b_plus, form.b_minus]
    support = set(form.minus_indices(nmax))
    for n in range(1, nmax + 1):
        row = [n]
        for key, g in zip(keys, gens):
            v = g(n) if (key.endswith("+") or n in support) else 0
            row += split_complex(v)
        out.rows.append(row)
    out.write(rc.out)
    return EXIT_OK


# ---------------------------------------------------------------- parsing


def _positive_digits(text: str) -> int:
    v = int(text)
    if v < 15:
        raise argparse.ArgumentTypeError("--digits must be at least 15")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--form", choices=["zagier", "eisenstein-p"], default="zagier")
    common.add_argument("--k", type=int, default=5, help="odd k >= 5 for the P-form")
    common.add_argument("--digits", type=_positive_digits, default=30)
    common.add_argument("--tol", type=float, default=None, help="pass threshold (relative)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grids")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--x", type=float, nargs="+", default=None, help="explicit x values")
    grid.add_argument("--x-start", type=float, default=None)
    grid.add_argument("--x-stop", type=float, default=None)
    grid.add_argument("--x-points", type=int, default=None)
    grid.add_argument("--x-log", action="store_true", help="geometric spacing")

    p = argparse.ArgumentParser(prog="maassum", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"maassum {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    h = sub.add_parser("hurwitz", parents=[common], help="table of H(n) with the class-number relation")
    h.add_argument("--min", type=int, default=0)
    h.add_argument("--max", type=int, default=100)
    h.set_defaults(func=cmd_hurwitz)

    s = sub.add_parser("special-selftest", parents=[common], help="special-function oracle grid")
    s.set_defaults(func=cmd_special)

    v = sub.add_parser("verify", parents=[common, grid], help="evaluate both sides of the summation formula")
    v.add_argument("--rho", type=float, nargs="+", default=None)
    v.add_argument("--experimental", action="store_true",
                   help="allow rho below the proven range; such rows never fail")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("figure", parents=[common, grid], help="ratio data for the class-number sums")
    f.add_argument("--which", type=int, choices=[1, 2, 3], required=True)
    f.add_argument("--experimental", action="store_true", help="accepted for symmetry; figure 3 always is")
    f.set_defaults(func=cmd_figure)

    c = sub.add_parser("converse", parents=[common], help="exponential-sum form of the Fricke relation")
    c.add_argument("--y", type=float, nargs="+", default=None)
    c.set_defaults(func=cmd_converse)

    d = sub.add_parser("dump-coeffs", parents=[common], help="coefficient table of a form")
    d.add_argument("--max", type=int, default=50)
    d.set_defaults(func=cmd_dump)
    return p


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    rc = RunConfig(args.subcommand, args.form, args.k, args.digits, args.out)
    try:
        if args.form == "eisenstein-p":
            build_form(args.form, args.k, args.digits)
        return args.func(args, rc)
    except UsageError as exc:
        print(f"maassum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"maassum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MaassumError as exc:
        print(f"maassum: numeric failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
