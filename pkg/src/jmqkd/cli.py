"""Command-line entry point: ``python -m jmqkd <command> ...``.

Every command produces a list of rows written as CSV (default) or JSON.
Curves use the columns ``x,y,formula``.  Set THREADS to cap the number of
worker threads used for curve grids.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bounds, gaussian, keyrate
from .jm_solver import IndeterminateError, JmProblem, jm_threshold_bracket
from .keyrate import INF, KeyRateScenario, parse_count
from .qop import parse_direction

# Published reference values for the threshold tables, in percent.
TABLE2_REF = {
    (3, 2, 1): (88.3, 89.8),
    (INF, INF, 1): (87.4, 88.8),
    (INF, INF, INF): (85.3, 87.1),
}
TABLE3_REF = {
    (3, 2, 1): (72.7, 89.8),
    (INF, INF, 1): (68.3, 88.8),
    (INF, INF, INF): (74.2, 87.1),
}
TABLE1_K = (1, 2, 3, INF)
TABLE1_N = (2, 3, 4, INF)


class CliError(Exception):
    pass


def _fmt(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    if x is None:
        return ""
    return str(x)


def _count(n):
    return "inf" if n == INF else str(int(n))


def write_rows(rows, fmt, out=None):
    if fmt == "json":
        def clean(v):
            if isinstance(v, float) and (math.isinf(v) or math.isnan(v)):
                return str(v)
            return v
        text = json.dumps([{k: clean(v) for k, v in r.items()} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(list(rows[0].keys()))
            for r in rows:
                w.writerow([_fmt(v) for v in r.values()])
        text = buf.getvalue()
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _threads():
    try:
        n = int(os.environ.get("THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else min(8, os.cpu_count() or 1)


def _pmap(fn, xs):
    n = _threads()
    if n == 1:
        return [fn(x) for x in xs]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, xs))


# -- jm-threshold --------------------------------------------------------------

def cmd_jm_threshold(args):
    if not args.dirs:
        raise CliError("--dirs is required")
    dirs = [parse_direction(t) for t in args.dirs.split(",")]
    if len(dirs) > 6:
        raise CliError("at most 6 directions")
    v = 1.0 if args.v is None else args.v
    n = len(dirs)
    try:
        lo, hi = jm_threshold_bracket(JmProblem(np.array(dirs), v))
    except IndeterminateError as e:
        raise CliError(str(e))
    rows = [{"x": v, "y": lo, "formula": "jm-solver"},
            {"x": v, "y": hi, "formula": "jm-solver-upper"}]
    cands = [bounds.ub_loss_any(n), bounds.ub_whitenoise(n, 2, v)]
    if n >= 2:
        cands.append(bounds.ub_binary_qubit(n, v))
    for b in cands:
        rows.append({"x": v, "y": b.value, "formula": b.formula})
        rows.append({"x": v, "y": lo - b.value, "formula": "gap:" + b.formula})
    return rows


# -- curves ------------------------------------------------------------------

def _case(token):
    parts = token.split("-")
    if len(parts) != 3:
        raise CliError(f"bad case {token!r}; expected e.g. 3-2-1 or inf-inf-1")
    return tuple(parse_count(p) for p in parts)


def curve_function(cid):
    """Map a curve id to (function of x, formula id, default x range)."""
    if cid.startswith("fig4-solid-"):
        N = int(cid.rsplit("-", 1)[1])
        return (lambda v: bounds.ub_whitenoise(N, 2, v).value), "whitenoise-extendibility", (1 / 3, 1.0)
    if cid.startswith("fig4-dashed-"):
        N = int(cid.rsplit("-", 1)[1])
        return (lambda v: bounds.ub_binary_qubit(N, v).value), "binary-qubit-signed-sum", (1 / 3, 1.0)
    if cid == "fig4-allpvm":
        return (lambda v: bounds.ub_all_qubit_pvms(v).value), "all-qubit-pvms", (1 / 3, 1.0)
    for prefix, binning in (("fig6-", False), ("fig7-", True)):
        if cid.startswith(prefix):
            case = _case(cid[len(prefix):])
            sc = KeyRateScenario("DIQKD", *case, binning=binning)
            opt = binning and case != (INF, INF, INF)

            def f(v, sc=sc, opt=opt):
                e = keyrate.diqkd_threshold(sc, "eta-at-v1", theta_opt=opt, at=v, tol=1e-9)
                return 1.0 if e is None else e
            name = ("diqkd-bin-" if binning else "diqkd-nobin-") + "-".join(_count(c) for c in case)
            return f, name, (0.85, 1.0)
    raise CliError(f"unknown curve id {cid!r}")


def cmd_curve(args):
    if not args.id:
        raise CliError("--id is required")
    f, name, (x0, x1) = curve_function(args.id)
    if args.at:
        xs = [float(s) for s in args.at.split(",")]
    else:
        lo = x0 if args.min is None else args.min
        hi = x1 if args.max is None else args.max
        if args.points < 2:
            raise CliError("need at least 2 grid points")
        if not (0 <= lo <= hi <= 1):
            raise CliError("grid must lie within [0, 1]")
        xs = list(np.linspace(lo, hi, args.points))
    ys = _pmap(f, xs)
    return [{"x": float(x), "y": float(y), "formula": name} for x, y in zip(xs, ys)]


# -- tables --------------------------------------------------------------------

def table_rows():
    rows = []
    for K in TABLE1_K:
        for N in TABLE1_N:
            if K > N:
                continue
            rows.append({"table": "1", "case": f"K={_count(K)},N={_count(N)}", "axis": "attack",
                         "computed": "+".join(keyrate.table1_cell(K, N)), "reference": "", "deviation_pp": ""})
    for tab, ref, binning in (("2", TABLE2_REF, False), ("3", TABLE3_REF, True)):
        for case, (re, rv) in ref.items():
            sc = KeyRateScenario("DIQKD", *case, binning=binning)
            opt = binning and case != (INF, INF, INF)
            for axis, r in (("eta-at-v1", re), ("v-at-eta1", rv)):
                x = keyrate.diqkd_threshold(sc, axis, theta_opt=opt)
                rows.append({"table": tab, "case": "(" + ",".join(_count(c) for c in case) + ")", "axis": axis,
                             "computed": 100 * x, "reference": r, "deviation_pp": 100 * x - r})
    return rows


def cmd_tables(args):
    return table_rows()


# -- gaussian -------------------------------------------------------------------

def cmd_gaussian(args):
    eta = args.eta
    eps = 0.0 if args.eps is None else args.eps
    N = 2 if args.N is None else int(args.N)
    if eta is None:
        raise CliError("--eta is required")
    try:
        th = gaussian.thermal_xy(gaussian.ThermalParams(eta, eps))
    except ValueError as e:
        raise CliError(str(e))
    if N < 1:
        raise CliError("--N must be >= 1")
    rows = [
        {"quantity": "n_extendable", "value": gaussian.n_extendable_gaussian(th, N)},
        {"quantity": "ub_thermal", "value": gaussian.ub_thermal(N, eps).value},
        {"quantity": "ub_gaussian_meas", "value": gaussian.ub_gaussian_meas(eps).value},
        {"quantity": "no_gauss_cc_attack", "value": gaussian.no_gauss_cc_attack(eta, eps, N)},
    ]
    try:
        G, s2 = gaussian.homodyne_sim_params(eta, eps)
        rows += [{"quantity": "homodyne_G", "value": G}, {"quantity": "homodyne_sigma2", "value": s2}]
    except ValueError as e:
        rows.append({"quantity": "homodyne_violation", "value": str(e)})
    return rows


# -- keyrate -------------------------------------------------------------------

def cmd_keyrate(args):
    proto = (args.protocol or "diqkd").lower()
    rows = []
    if proto == "bb84":
        if args.eta is not None and args.v is not None:
            b = keyrate.bb84_bound(args.eta, args.v, args.bin)
            rows.append({"quantity": "bound", "value": b.value})
            rows.append({"quantity": "zero_key", "value": b.zero_key})
        v = 1.0 if args.v is None else args.v
        rows.append({"quantity": "eta_threshold", "value": keyrate.bb84_threshold(v, args.bin)})
    elif proto == "rdi":
        N = INF if args.N is None else parse_count(args.N)
        if args.eta is None:
            raise CliError("--eta is required for rdi")
        if args.v is not None:
            if args.theta is not None:
                val = keyrate.rdi_bound(args.eta, args.v, args.theta, N).value
                rows.append({"quantity": "bound", "value": val})
            else:
                th, val = keyrate.rdi_max_theta(args.eta, args.v, N)
                rows += [{"quantity": "theta_opt", "value": th}, {"quantity": "bound_max", "value": val}]
        rows.append({"quantity": "v_threshold", "value": keyrate.rdi_threshold(args.eta, N)})
        rows.append({"quantity": "v_full_jm", "value": keyrate.rdi_full_jm_visibility(args.eta)})
    elif proto == "diqkd":
        case = (3, 2, 1) if not args.setting else tuple(parse_count(s) for s in args.setting.split(","))
        if len(case) != 3:
            raise CliError("--setting needs NA,NB,KB")
        theta = math.pi / 4 if args.theta is None else args.theta
        try:
            sc = KeyRateScenario("DIQKD", *case, binning=args.bin, theta=theta)
        except ValueError as e:
            raise CliError(str(e))
        opt = args.bin and args.theta is None and case != (INF, INF, INF)
        if args.eta is not None and args.v is not None:
            if opt:
                th, val = keyrate.diqkd_max_theta(sc, args.eta, args.v)
                rows += [{"quantity": "theta_opt", "value": th}, {"quantity": "bound_max", "value": val}]
            else:
                b = keyrate.diqkd_bound(sc, args.eta, args.v)
                rows.append({"quantity": "bound", "value": b.value})
                for k, v in b.components.items():
                    rows.append({"quantity": k, "value": v})
        rows.append({"quantity": "eta_threshold_at_v1", "value": keyrate.diqkd_threshold(sc, "eta-at-v1", opt)})
        rows.append({"quantity": "v_threshold_at_eta1", "value": keyrate.diqkd_threshold(sc, "v-at-eta1", opt)})
    else:
        raise CliError(f"unknown protocol {proto!r}")
    return rows


def build_parser():
    ap = argparse.ArgumentParser(prog="jmqkd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="write to this file instead of stdout")

    p = sub.add_parser("jm-threshold", help="exact and analytic efficiency thresholds for qubit directions")
    p.add_argument("--dirs", help="comma-separated directions: x, y, z, -z or a:b:c")
    p.add_argument("--v", type=float)
    common(p)
    p.set_defaults(func=cmd_jm_threshold)

    p = sub.add_parser("curve", help="threshold curves")
    p.add_argument("--id", help="fig4-solid-N, fig4-dashed-N, fig4-allpvm, fig6-A-B-K, fig7-A-B-K")
    p.add_argument("--min", type=float)
    p.add_argument("--max", type=float)
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--at", help="comma-separated x values instead of a grid")
    common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("tables", help="recompute the threshold tables")
    common(p)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("gaussian", help="thermal-noise channel checks")
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--N")
    common(p)
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("keyrate", help="key-rate bounds and thresholds")
    p.add_argument("--protocol", choices=("bb84", "rdi", "diqkd"), default="diqkd")
    p.add_argument("--eta", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--N")
    p.add_argument("--K")
    p.add_argument("--setting", help="NA,NB,KB for diqkd, e.g. 3,2,1 or inf,inf,1")
    p.add_argument("--bin", dest="bin", action="store_true")
    p.add_argument("--no-bin", dest="bin", action="store_false")
    p.set_defaults(bin=False)
    common(p)
    p.set_defaults(func=cmd_keyrate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        rows = args.func(args)
    except (CliError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    write_rows(rows, args.format, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
