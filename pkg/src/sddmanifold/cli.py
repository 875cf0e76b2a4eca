"""Command line front end: ``sddm verify|map|sample-manifold|integrate|plot``.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
from pathlib import Path

import numpy as np

from .almostgraph import RootError, h_eta, h_eta_deriv, map_A, map_B
from .dde import integrate
from .funcspace import SegmentError, norm_c1, read_segment_csv, write_segment_csv
from .problem import (ConfigError, Problem, load_config, make_manifold_point, make_problem,
                      random_shape, residual_Xf)
from .templates import psi_template, psi_template_deriv
from .transversal import bump_a, bump_a_deriv
from .verify import SUITES, Counts, run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _problem(args) -> Problem:
    if not args.config:
        raise UsageError("--config is required")
    return make_problem(load_config(args.config))


def _write_table(path, header, rows, fmt="csv") -> None:
    """CSV (or JSON list of records) to ``path``, or stdout when path is None."""
    fh = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
    try:
        if fmt == "json":
            json.dump([dict(zip(header, map(float, row))) for row in rows], fh, indent=1)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v) + 0.0) for v in row])
    finally:
        if path:
            fh.close()


def _write_svg(path, xs, ys, title="") -> None:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    W, H, pad = 640, 400, 40
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = pad + (xs - x0) / (x1 - x0) * (W - 2 * pad)
    py = H - pad - (ys - y0) / (y1 - y0) * (H - 2 * pad)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    Path(path).write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">\n'
        f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" '
        f'fill="none" stroke="#999"/>\n'
        f'<text x="{pad}" y="{pad - 10}" font-size="14">{title}</text>\n'
        f'<text x="{pad}" y="{H - 10}" font-size="11">x: [{x0:.4g}, {x1:.4g}]  y: [{y0:.4g}, {y1:.4g}]</text>\n'
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{pts}"/>\n</svg>\n',
        encoding="utf-8")


# -- subcommands -------------------------------------------------------------

def cmd_verify(args) -> int:
    P = _problem(args)
    suites = SUITES if args.suite in (None, "all") else tuple(s.strip() for s in args.suite.split(","))
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise UsageError(f"unknown suite(s) {sorted(unknown)}; choose from {', '.join(SUITES)}")
    counts = Counts().scaled(args.scale) if args.scale != 1.0 else Counts()
    report = run_suites(P, suites, seed=args.seed, counts=counts)
    for check in report.checks:
        print(check.line(), file=sys.stderr)
    payload = {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), **report.to_dict()}
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_map(args) -> int:
    P = _problem(args)
    if not args.inp or not args.out:
        raise UsageError("map needs --in and --out")
    seg = read_segment_csv(args.inp)
    if seg.r != P.r:
        raise UsageError(f"segment domain [-{seg.r}, 0] does not match r={P.r}")
    mapping = map_A if args.dir == "A" else map_B
    out, report = mapping(P, seg, check_overlap=True)
    write_segment_csv(args.out, out, n_nodes=args.nodes)
    if args.emit_branch_report:
        Path(args.emit_branch_report).write_text(
            json.dumps({"direction": args.dir, **report.to_dict()}, indent=2) + "\n",
            encoding="utf-8")
    return EXIT_OK


def cmd_sample_manifold(args) -> int:
    P = _problem(args)
    lo = P.eta0 - 2.0 if args.xi_min is None else args.xi_min
    hi = P.eta0 + 2.0 if args.xi_max is None else args.xi_max
    xis = np.linspace(lo, hi, args.count) if args.count > 0 and lo <= hi else np.array([])
    rng = np.random.default_rng(args.seed)
    rows = []
    for xi in xis:
        shape = random_shape(rng) if args.random_shapes else None
        phi = make_manifold_point(P, float(xi), shape)
        rows.append((xi, phi.eval(0.0), phi.eval_deriv(0.0), phi.eval(-P.delay(xi)),
                     norm_c1(phi), residual_Xf(P, phi)))
    _write_table(args.out, ["xi", "x0", "dx0", "x_delayed", "norm_c1", "residual"], rows, args.format)
    return EXIT_OK


def _initial_segment(args, P: Problem):
    if args.init:
        return read_segment_csv(args.init)
    if args.xi is not None:
        return make_manifold_point(P, args.xi)
    raise UsageError("give --init seg.csv or --xi")


def cmd_integrate(args) -> int:
    P = _problem(args)
    traj = integrate(P, _initial_segment(args, P), args.t_end, args.step)
    rows = [(t, x, dx, traj.residual_at(P, float(t)))
            for t, x, dx in zip(traj.ts, traj.xs, traj.ms)]
    rows[0] = (0.0, traj.xs[0], traj.initial.eval_deriv(0.0), traj.residual_at(P, 0.0))
    _write_table(args.out, ["t", "x", "dx", "residual"], rows, args.format)
    return EXIT_OK


def cmd_plot(args) -> int:
    P = _problem(args)
    n = args.points
    what = args.what
    if what == "psi":
        t = np.linspace(-P.r, 0.0, n)
        z = None if args.eta is None or args.eta == P.eta0 else -P.delay(args.eta)
        if z == 0.0:
            z = None
        header, cols = ["t", "psi", "dpsi"], [t, psi_template(t, P.kappa, z),
                                              psi_template_deriv(t, P.kappa, z)]
    elif what == "bump":
        xi = P.eta0 + np.linspace(-2 * P.rho, 2 * P.rho, n)
        header, cols = ["xi", "a", "da"], [xi, bump_a(P, xi), bump_a_deriv(P, xi)]
    elif what == "h":
        eta = P.eta0 if args.eta is None else args.eta
        tau = P.eta0 + np.linspace(-2 * P.rho, 2 * P.rho, n)
        header, cols = ["tau", "h", "dh"], [tau, h_eta(P, eta, tau), h_eta_deriv(P, eta, tau)]
    elif what == "slice":
        eta = P.eta0 if args.eta is None else args.eta
        phi = make_manifold_point(P, eta)
        t = np.linspace(-P.r, 0.0, n)
        header, cols = ["t", "x", "dx"], [t, phi.eval(t), phi.eval_deriv(t)]
    else:
        traj = integrate(P, _initial_segment(args, P), args.t_end, args.step)
        t = np.linspace(0.0, traj.t_end, n)
        header = ["t", "x", "residual"]
        cols = [t, [traj.eval(float(s)) for s in t], [traj.residual_at(P, float(s)) for s in t]]
    cols = [np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in cols]
    _write_table(args.out, header, list(zip(*cols)), args.format)
    if args.svg:
        _write_svg(args.svg, cols[0], cols[1], title=f"{what} ({P.name or 'instance'})")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="instance JSON (or builtin name LIN / SIN)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="sddm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("--suite", default="all", help=f"comma list of {', '.join(SUITES)} or 'all'")
    p.add_argument("--scale", type=float, default=1.0, help="multiply every sample count")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("map", parents=[common], help="apply A or B to a segment CSV")
    p.add_argument("--dir", choices=("A", "B"), required=True)
    p.add_argument("--in", dest="inp")
    p.add_argument("--nodes", type=int, help="export on a uniform grid of this size")
    p.add_argument("--emit-branch-report")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("sample-manifold", parents=[common], help="explicit points of X_f")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--xi-min", type=float)
    p.add_argument("--xi-max", type=float)
    p.add_argument("--random-shapes", action="store_true")
    p.set_defaults(func=cmd_sample_manifold)

    def add_flow(p):
        p.add_argument("--init", help="initial segment CSV")
        p.add_argument("--xi", type=float, help="start from the manifold point of this slice")
        p.add_argument("--t-end", type=float, default=3.0)
        p.add_argument("--step", type=float, default=1e-3)

    p = sub.add_parser("integrate", parents=[common], help="method-of-steps integration")
    add_flow(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("plot", parents=[common], help="sampled curves as CSV/SVG")
    p.add_argument("what", choices=("psi", "bump", "h", "slice", "trajectory"))
    p.add_argument("--eta", type=float)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--svg")
    add_flow(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, SegmentError, RootError, ValueError, OSError) as exc:
        print(f"sddm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
