"""Command-line entry point: surface ingestion, experiments, CSV/SVG output.

Exit codes: 0 success, 1 validation error (bad flags, files, or surface
data), 2 runtime error (degenerate decomposition, failed checks).
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .csvio import read_ccdf_csv, write_ccdf_csv
from .distributions import (EmpiricalCCDF, SamplePlan, approximation_check,
                            convergence_sweep, estimate_F, estimate_Ftilde,
                            estimate_ftilde, renormalization_pathwise_check)
from .errors import (FlatPathError, InvalidEpsilon, NotFoundWithinBound,
                     SpecFileError, SurfaceError)
from .specfile import load_spec, parse_angle
from .surface import shortest_singularity_separation
from .svgplot import write_svg
from .zippered import compute_decomposition, exact_distribution


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_validate(args) -> int:
    surface = load_spec(args.spec)
    try:
        sep = _fmt(shortest_singularity_separation(surface, args.bound))
    except NotFoundWithinBound:
        sep = f">{_fmt(args.bound)}"
    print(f"name: {surface.name}")
    print(f"alphas={list(surface.stratum.alphas)} kappa={surface.stratum.kappa} "
          f"area={_fmt(surface.total_area)} separation={sep}")
    print(f"polygons: {len(surface.polygons)}, cone classes: {len(surface.cone_classes)}")
    return 0


def _plan_from_args(args) -> SamplePlan:
    if args.theta in ("avg", "average"):
        mode, theta = "average", None
    else:
        mode, theta = "fixed", parse_angle(args.theta)
    return SamplePlan(n_samples=args.samples, seed=args.seed, epsilon=args.epsilon,
                      theta_mode=mode, theta=theta,
                      grid_max=args.grid_max, grid_points=args.grid_points)


def cmd_simulate(args) -> int:
    surface = load_spec(args.spec)
    plan = _plan_from_args(args)
    modes = ["circular", "segment"] if args.mode == "both" else [args.mode]
    for mode in modes:
        if mode == "circular":
            ccdf = estimate_F(surface, plan)
        elif plan.theta_mode == "fixed":
            ccdf = estimate_ftilde(surface, plan)
        else:
            ccdf = estimate_Ftilde(surface, plan)
        path = f"{args.out}_{mode}.csv"
        write_ccdf_csv(path, ccdf)
        print(f"wrote {path} (n={ccdf.n_samples}, censored={ccdf.n_censored}, "
              f"aborted={ccdf.n_aborted})")
    return 0


def cmd_zr(args) -> int:
    surface = load_spec(args.spec)
    decomp = compute_decomposition(surface, args.epsilon, mode=args.prongs,
                                   height_bound=args.height_bound)
    print(f"# surface: {surface.name}")
    print(f"# epsilon: {_fmt(args.epsilon)}")
    print(f"# covered_area: {_fmt(decomp.covered_area)}")
    print("width,height")
    for r in decomp.rectangles:
        print(f"{_fmt(r.width)},{_fmt(r.height)}")
    if args.out:
        grid = np.linspace(0.0, args.grid_max, args.grid_points)
        values = exact_distribution(decomp, grid)
        ccdf = EmpiricalCCDF(grid=grid, values=values, stderr=np.zeros_like(grid),
                             n_samples=0, n_censored=0, n_aborted=0,
                             meta={"surface": surface.name, "mode": "exact-segment",
                                   "epsilon": repr(float(args.epsilon)),
                                   "theta": repr(-math.pi / 2.0),
                                   "theta_mode": "fixed", "samples": "0",
                                   "seed": "0", "censored": "0"})
        write_ccdf_csv(args.out, ccdf)
        print(f"wrote {args.out}")
    return 0


def cmd_renorm_check(args) -> int:
    surface = load_spec(args.spec)
    theta = None if args.theta == "rand" else parse_angle(args.theta)
    report = renormalization_pathwise_check(surface, args.epsilon, args.samples,
                                            args.seed, theta=theta)
    status = "PASS" if report.passes else "FAIL"
    print(f"renorm-check: epsilon={_fmt(report.epsilon)} samples={report.n_samples} "
          f"compared={report.n_compared} censored={report.n_censored} "
          f"aborted={report.n_aborted} mismatched={report.n_status_mismatch}")
    print(f"max_rel_diff={report.max_rel_diff:.3e} tol={report.tol:.1e} {status}")
    return 0 if report.passes else 2


def cmd_sweep(args) -> int:
    surface = load_spec(args.spec)
    plan = SamplePlan(n_samples=args.samples, seed=args.seed,
                      epsilon=args.epsilons[0],
                      grid_max=args.grid_max, grid_points=args.grid_points)
    report = convergence_sweep(surface, args.epsilons, plan)
    print("ks-distance table (successive epsilon pairs):")
    print("eps_a,eps_b,ks,at_t,sigma")
    for e in report.entries:
        print(f"{_fmt(e.eps_a)},{_fmt(e.eps_b)},{e.distance:.6g},"
              f"{_fmt(e.argmax_t)},{e.sigma:.3g}")
    print("approximation check (sup_t |F - Ftilde| vs 2*kappa*pi*eps^2):")
    print("eps,sup_gap,bound,sigma,r10_violations,r01_sup,r01_bound")
    gaps = []
    for eps in args.epsilons:
        rep = approximation_check(surface, eps, plan)
        gaps.append(rep.sup_gap)
        print(f"{_fmt(eps)},{rep.sup_gap:.6g},{rep.bound:.6g},{rep.sup_gap_sigma:.3g},"
              f"{rep.r10_violations},{rep.r01_sup:.6g},{rep.r01_bound:.6g}")
    if len(args.epsilons) >= 2 and all(g > 0 for g in gaps):
        slope = float(np.polyfit(np.log(args.epsilons), np.log(gaps), 1)[0])
        print(f"log-log slope of sup_gap vs eps: {slope:.3f}")
    return 0


def cmd_plot(args) -> int:
    curves = []
    for path in args.csvs:
        ccdf = read_ccdf_csv(path)
        label = ccdf.meta.get("surface", path)
        mode = ccdf.meta.get("mode", "")
        eps = ccdf.meta.get("epsilon", "")
        curves.append((f"{label} {mode} eps={eps}"[:40], ccdf.grid, ccdf.values))
    write_svg(args.out, curves, title=args.title)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flatpath",
        description="Free path lengths of linear flows on translation surfaces.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="stratum report for a surface spec file")
    v.add_argument("spec")
    v.add_argument("--bound", type=float, default=2.0,
                   help="saddle-connection search bound (default 2)")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="Monte Carlo free-path distributions -> CSV")
    s.add_argument("spec")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--mode", choices=["circular", "segment", "both"], default="both")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--theta", default="avg",
                   help="'avg', radians, or 'deg:<degrees>' (default avg)")
    s.add_argument("--grid-max", type=float, default=4.0)
    s.add_argument("--grid-points", type=int, default=401)
    s.add_argument("--out", required=True, help="output path prefix")
    s.set_defaults(func=cmd_simulate)

    z = sub.add_parser("zr", help="zippered-rectangle table and exact distribution")
    z.add_argument("spec")
    z.add_argument("--epsilon", type=float, default=0.5)
    z.add_argument("--prongs", choices=["pair", "all"], default="pair")
    z.add_argument("--height-bound", type=float, default=1e3)
    z.add_argument("--grid-max", type=float, default=4.0)
    z.add_argument("--grid-points", type=int, default=401)
    z.add_argument("--out", help="CSV path for the exact distribution")
    z.set_defaults(func=cmd_zr)

    r = sub.add_parser("renorm-check", help="pathwise renormalization identity check")
    r.add_argument("spec")
    r.add_argument("--epsilon", type=float, required=True)
    r.add_argument("--theta", default="rand",
                   help="'rand', radians, or 'deg:<degrees>' (default rand)")
    r.add_argument("--samples", type=int, default=2000)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_renorm_check)

    w = sub.add_parser("sweep", help="KS distances over a decreasing epsilon list")
    w.add_argument("spec")
    w.add_argument("--epsilons", type=float, nargs="+", required=True)
    w.add_argument("--samples", type=int, default=100_000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--grid-max", type=float, default=4.0)
    w.add_argument("--grid-points", type=int, default=401)
    w.set_defaults(func=cmd_sweep)

    g = sub.add_parser("plot", help="CSV survivor curves -> standalone SVG")
    g.add_argument("csvs", nargs="+")
    g.add_argument("--out", required=True)
    g.add_argument("--title", default=None)
    g.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecFileError, SurfaceError, InvalidEpsilon, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FlatPathError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
