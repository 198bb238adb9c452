"""Command-line entry point: ``spherehier <subcommand> ...``.

Every subcommand produces a table of rows.  Rows that assert an inequality
carry a ``pass`` column and the exit status is 0 only if all of them pass.
Tables go to ``--out`` (CSV or JSON by extension) or to stdout as CSV; a
human-readable summary with timings goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from . import definetti, hierarchy, poly, sdp
from . import symmat as sm

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class Table:
    def __init__(self, columns: list[str]):
        self.columns = columns
        self.rows: list[dict] = []
        self.meta: dict = {}

    def add(self, **row) -> None:
        self.rows.append(row)

    @property
    def passed(self) -> bool:
        return all(row.get("pass", True) for row in self.rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_csv(table: Table, stream, header: dict) -> None:
    stream.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(row.get(c)) for c in table.columns])


def write_json(table: Table, stream, header: dict) -> None:
    doc = dict(header)
    doc["columns"] = table.columns
    doc["rows"] = [{c: _json_value(row.get(c)) for c in table.columns} for row in table.rows]
    doc["meta"] = {k: _json_value(v) for k, v in table.meta.items()}
    doc["passed"] = table.passed
    json.dump(doc, stream, indent=2, sort_keys=False)
    stream.write("\n")


def emit(table: Table, args) -> None:
    header = {"schema": SCHEMA, "command": args.command, "seed": args.seed}
    if args.out:
        with open(args.out, "w", newline="") as fh:
            if args.out.endswith(".json"):
                write_json(table, fh, header)
            else:
                write_csv(table, fh, header)
    else:
        write_csv(table, sys.stdout, header)


def _r_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty r list")
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


# ------------------------------------------------------------ subcommands

def cmd_bounds(args, log) -> Table:
    p = poly.read_form(args.poly)
    label = args.label or args.poly
    t = Table(["label", "r", "method", "value", "status", "N", "pass"])
    if args.dump_matrix:
        with open(args.dump_matrix, "w") as fh:
            sm.write_matrix_csv(sm.maxsym_of_form(p), fh)
    if args.dump_sdp:
        prob, _, _ = hierarchy.sos_problem(p, args.r)
        with open(args.dump_sdp, "w") as fh:
            prob.dump(fh)
    reports = []
    if args.method in ("spectral", "both"):
        reports.append(hierarchy.spectral_bound(p, args.r, label))
    if args.method in ("sos", "both"):
        reports.append(hierarchy.sos_bound(p, args.r, label))
    values = {rep.method: rep.value for rep in reports}
    # sandwich sp_r <= sos_r, asserted when both were computed
    sandwich = len(values) < 2 or values["spectral"] <= values["sos"] + 1e-7
    for rep in reports:
        status = rep.diagnostics.get("status", "")
        ok = sandwich and status in ("", sdp.Status.OPTIMAL.value)
        t.add(label=label, r=args.r, method=rep.method, value=rep.value, status=status,
              N=rep.diagnostics["N"], **{"pass": ok})
        log(f"{rep.method:<8} r={args.r}: {rep.value:.12g}  ({rep.wall_ms:.1f} ms{', ' + status if status else ''})")
    return t


def cmd_choi_lam(args, log) -> Table:
    rows = hierarchy.choi_lam_experiment(args.rmax, args.sos_rmax)
    t = Table(["r", "sp", "sos", "floor", "negative", "above_floor", "monotone", "pass"])
    for row in rows:
        t.add(r=row.r, sp=row.sp, sos=row.sos, floor=row.floor, negative=row.negative,
              above_floor=row.above_floor, monotone=row.monotone, **{"pass": row.passed})
        log(f"r={row.r}: sp={row.sp:.10g} floor={row.floor:.4g} "
            f"{'pass' if row.passed else 'FAIL'} ({row.wall_ms:.1f} ms)")
    return t


def cmd_counterexample(args, log) -> Table:
    if args.rmax < 2:
        raise ValueError("--rmax must be >= 2")
    rho2 = definetti.rho_r(2)
    base1, baseF = definetti.maxsym_distance(rho2)
    t = Table(["r", "trace_error", "distance1", "distanceF", "pass"])
    for r in range(2, args.rmax + 1):
        red = sm.dense_partial_trace(definetti.rho_r(r), r - 2)
        err = float(np.abs(red.entries - rho2.entries).max())
        d1, dF = definetti.maxsym_distance(red)
        ok = err <= 1e-12 and d1 > 0.1 and abs(d1 - base1) <= 1e-12
        t.add(r=r, trace_error=err, distance1=d1, distanceF=dF, **{"pass": ok})
        log(f"r={r}: |Tr rho_r - rho_2| = {err:.2e}, distance {d1:.12g}")
    return t


DECAY_COLUMNS = ["n", "d", "r", "trial", "distance1", "distanceF", "bound", "alpha", "atoms", "pass"]


def _decay(kind: str, args, log) -> Table:
    res = definetti.decay_experiment(kind, args.n, args.d, args.r, trials=args.trials, seed=args.seed,
                                     max_atoms=args.max_atoms)
    t = Table(DECAY_COLUMNS)
    for row in res.rows:
        t.add(**{k: v for k, v in row.as_dict().items() if k != "passed"}, **{"pass": row.passed})
    t.meta = {"kind": kind, "slope": res.slope, "note": res.note}
    n_pass = sum(row.passed for row in res.rows)
    log(f"{kind}: {n_pass}/{len(res.rows)} rows within bound"
        + (f", fitted slope {res.slope:.3f}" if res.slope is not None else f", slope: {res.note}"))
    if kind == "banded" and n_pass < len(res.rows):
        log("rows outside the bound are inconclusive (heuristic search), not refutations")
    return t


def cmd_constants(args, log) -> Table:
    t = Table(["d", "alpha_d", "phi_half", "phi_zero", "phi_one", "reznick_coefficient",
               "reznick_residual", "pass"])
    d = args.d
    a = definetti.alpha_d(d)
    ph, p0, p1 = definetti.phi_d(0.5, d), definetti.phi_d(0.0, d), definetti.phi_d(1.0, d)
    try:
        c, V = definetti.reznick_vectors(d)
        resid = definetti.reznick_residual(c, V, d)
    except definetti.ReznickValidationError as exc:
        log(f"Reznick identity failed: {exc}")
        c, resid = math.nan, math.inf
    ok = abs(ph - a) <= 1e-10 and abs(p0 - 1) <= 1e-10 and abs(p1 - 1) <= 1e-10 and resid <= 1e-10
    t.add(d=d, alpha_d=a, phi_half=ph, phi_zero=p0, phi_one=p1, reznick_coefficient=c,
          reznick_residual=resid, **{"pass": ok})
    grid = np.linspace(0.0, 1.0, 11)
    t.meta = {"phi_grid": [[float(x), definetti.phi_d(float(x), d)] for x in grid]}
    log(f"alpha_{d} = {a:.12g}, phi_{d}(1/2) = {ph:.12g}, Reznick coefficient {c:.12g} (residual {resid:.1e})")
    return t


def cmd_harmonic(args, log) -> Table:
    f = poly.read_form(args.poly)
    dec = poly.harmonic_decompose(f)
    resid = f.max_abs_diff(dec.recompose())
    t = Table(["k", "degree", "nterms", "form", "pass"])
    for k, fk in enumerate(dec.components):
        text = poly.format_form(fk).strip().replace("\n", "; ")
        t.add(k=k, degree=2 * k, nterms=fk.nterms, form=text, **{"pass": resid <= 1e-10})
        log(f"f_{2 * k}: {text or '0'}")
    t.meta = {"recomposition_residual": resid}
    log(f"recomposition residual {resid:.2e}")
    return t


def cmd_kappa(args, log) -> Table:
    info = hierarchy.kappa(args.n, args.d)
    t = Table(["n", "d", "lambda_min", "lambda_max", "kappa", "kappa_conjectured", "matches_conjecture"])
    t.add(**info)
    log(f"kappa(n={args.n}, d={args.d}) = {info['kappa']:.12g}, conjectured {info['kappa_conjectured']:.12g}")
    return t


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the table to PATH (.csv or .json)")
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress the summary on stderr")

    ap = argparse.ArgumentParser(prog="spherehier", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common], help="spectral and sos lower bounds for a form")
    b.add_argument("--poly", required=True, help="form file")
    b.add_argument("--r", type=_positive, required=True, help="hierarchy level")
    b.add_argument("--method", choices=["spectral", "sos", "both"], default="both")
    b.add_argument("--label", help="row label (default: file name)")
    b.add_argument("--dump-matrix", metavar="PATH", help="write MaxSym(p) as CSV")
    b.add_argument("--dump-sdp", metavar="PATH", help="write the sos SDP data")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("choi-lam", parents=[common], help="spectral bounds of the Choi-Lam form vs the floor")
    c.add_argument("--rmax", type=_positive, default=6)
    c.add_argument("--sos-rmax", type=_positive, default=None)
    c.set_defaults(func=cmd_choi_lam)

    df = sub.add_parser("definetti", help="de Finetti experiments")
    dsub = df.add_subparsers(dest="experiment", required=True)
    ce = dsub.add_parser("counterexample", parents=[common], help="the rho_r family")
    ce.add_argument("--rmax", type=_positive, default=5)
    ce.set_defaults(func=cmd_counterexample)
    for name, help_ in (("banded", "banded approximation bound check"), ("decay", "distance decay in r")):
        e = dsub.add_parser(name, parents=[common], help=help_)
        if name == "decay":
            e.add_argument("--kind", choices=["maxsym", "banded"], default="maxsym")
        e.add_argument("--n", type=_positive, default=2)
        e.add_argument("--d", type=_positive, default=2)
        e.add_argument("--r", type=_r_list, default=[4, 6, 8, 10], help="comma-separated levels")
        e.add_argument("--trials", type=_positive, default=5)
        e.add_argument("--max-atoms", type=_positive, default=60)
        e.set_defaults(func=(lambda a, log: _decay("banded", a, log)) if name == "banded"
                       else (lambda a, log: _decay(a.kind, a, log)))
    k = dsub.add_parser("constants", parents=[common], help="alpha_d, phi_d and the Reznick identity")
    k.add_argument("--d", type=_positive, default=2)
    k.set_defaults(func=cmd_constants)

    h = sub.add_parser("harmonic", parents=[common], help="harmonic decomposition of a form")
    h.add_argument("--poly", required=True)
    h.set_defaults(func=cmd_harmonic)

    kp = sub.add_parser("kappa", parents=[common], help="condition number of MaxSym(s^d)")
    kp.add_argument("--n", type=_positive, required=True)
    kp.add_argument("--d", type=_positive, required=True)
    kp.set_defaults(func=cmd_kappa)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "definetti":
        args.command = f"definetti-{args.experiment}"

    def log(msg: str) -> None:
        if not args.quiet:
            print(msg, file=sys.stderr)

    t0 = time.perf_counter()
    try:
        table = args.func(args, log)
    except (OSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"spherehier: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    emit(table, args)
    log(f"{'all checks pass' if table.passed else 'some checks FAILED'} "
        f"({1e3 * (time.perf_counter() - t0):.0f} ms)")
    return EXIT_OK if table.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())
