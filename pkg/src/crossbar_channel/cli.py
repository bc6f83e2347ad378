"""Command-line interface.

Exit codes: 0 success, 1 configuration or argument errors, 2 runtime
failures (solver, sampling, or a failed validation cross-check).  Flag
overrides win over configuration-file values.  Human-readable tables print
at 4 significant digits; machine-readable sections at 17.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import (ConfigError, ParameterBundle, default_bundle, format_config,
                     load_config, validate)
from .numerics import format_sig
from .oracle import SamplingPlan, corner_cells, estimate_channel_grid
from .read_channel import read_channel_params_general, read_error_probabilities
from .sweeps import (SweepSpec, replace_geometry, run_aspect_ratio_study,
                     run_capacity_sweep, run_heatmap, run_threshold_comparison)
from .thresholds import SCHEME_KINDS, baseline_threshold, stmc_approx, stmc_exact
from .write_channel import marginal_switch_failures, write_channel_params


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="crossbar-channel",
                     description="Crossbar resistive-memory channel models")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="parameter file; defaults apply when omitted")
    common.add_argument("--out", type=Path, default=Path("."),
                        help="output directory for data files")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--mode", choices=("ideal", "general"), default="ideal",
                        help="selector model for channel computations")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("heatmap", parents=[common],
                       help="per-cell channel parameters and capacity")
    p.add_argument("--size", type=int, default=None,
                   help="override to a size x size array")
    p.add_argument("--r-line", type=float, default=None,
                   help="override r_w = r_b")
    p.add_argument("--samples", type=int, default=100000,
                   help="per-cell read samples in general mode")

    p = sub.add_parser("capacity-sweep", parents=[common],
                       help="averaged capacity vs array size and line resistance")
    p.add_argument("--sizes", default="64,128,256,384",
                   help="comma-separated square array sizes")
    p.add_argument("--r-lines", default="10,20,30,40,50,60,70,80,90,100",
                   help="comma-separated line resistances")

    p = sub.add_parser("aspect-ratio", parents=[common],
                       help="averaged capacity across aspect ratios")
    p.add_argument("--total-cells", type=int, default=16384)
    p.add_argument("--ratios",
                   default="128x128,64x256,32x512,16x1024,8x2048,4x4096",
                   help="comma-separated MxN shapes")

    p = sub.add_parser("thresholds", parents=[common],
                       help="averaged read BER per thresholding scheme")
    p.add_argument("--sizes", default="128,256,512,1024,2048",
                   help="sizes for the size sweep")
    p.add_argument("--r-lines", default="10,20,30,40,50,60,70,80,90,100",
                   help="resistances for the resistance sweep")
    p.add_argument("--r-line", type=float, default=30.0,
                   help="fixed resistance for the size sweep")
    p.add_argument("--size", type=int, default=1024,
                   help="fixed size for the resistance sweep")
    p.add_argument("--scheme", default="naive,dtec,stmc-approx,stmc-exact",
                   help="comma-separated schemes to compare")

    sub.add_parser("solve-threshold", parents=[common],
                   help="baseline, approximate, and exact array thresholds")

    p = sub.add_parser("validate", parents=[common],
                       help="Monte-Carlo cross-check of the analytic channel")
    p.add_argument("--samples", type=int, default=1000000)

    sub.add_parser("show-config", parents=[common],
                   help="print the fully resolved parameter bundle")
    return parser


def _load_bundle(args) -> ParameterBundle:
    bundle = load_config(args.config) if args.config else default_bundle()
    geometry = bundle.geometry
    if getattr(args, "size", None):
        geometry = replace_geometry(geometry, m=args.size, n=args.size)
    if getattr(args, "r_line", None) is not None and args.command == "heatmap":
        geometry = replace_geometry(geometry, r_w=args.r_line, r_b=args.r_line)
    bundle = ParameterBundle(geometry, bundle.device, bundle.operating)
    violations = validate(*bundle)
    if violations:
        raise ConfigError("; ".join(violations))
    if args.mode == "general" and (math.isinf(geometry.r_sh)
                                   or math.isinf(geometry.r_su)):
        raise ConfigError("general mode requires finite r_sh and r_su in the "
                          "configuration")
    return bundle


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _shapes(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        m, _, n = part.partition("x")
        out.append((int(m), int(n)))
    return tuple(out)


def _make_spec(*a, **kw) -> SweepSpec:
    try:
        return SweepSpec(*a, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _cmd_heatmap(args, bundle) -> int:
    spec = _make_spec("heatmap", args.out, seed=args.seed, mode=args.mode,
                      samples=args.samples)
    path, _ = run_heatmap(spec, bundle)
    print(f"wrote {path}")
    return 0


def _cmd_capacity_sweep(args, bundle) -> int:
    spec = _make_spec("capacity-sweep", args.out, sizes=_ints(args.sizes),
                      line_resistances=_floats(args.r_lines), seed=args.seed,
                      mode=args.mode)
    path, _ = run_capacity_sweep(spec, bundle)
    print(f"wrote {path}")
    return 0


def _cmd_aspect_ratio(args, bundle) -> int:
    spec = _make_spec("aspect-ratio", args.out, total_cells=args.total_cells,
                      shapes=_shapes(args.ratios), seed=args.seed, mode=args.mode)
    path, _ = run_aspect_ratio_study(spec, bundle)
    print(f"wrote {path}")
    return 0


def _cmd_thresholds(args, bundle) -> int:
    for name in args.scheme.split(","):
        if name.strip() not in SCHEME_KINDS:
            raise ConfigError(f"unknown scheme {name.strip()!r}; "
                              f"choose from {', '.join(SCHEME_KINDS)}")
    spec = _make_spec("thresholds", args.out,
                      threshold_sizes=_ints(args.sizes),
                      line_resistances=_floats(args.r_lines),
                      threshold_fixed_r=args.r_line,
                      threshold_fixed_size=args.size,
                      schemes=tuple(s.strip() for s in args.scheme.split(",")),
                      seed=args.seed, mode=args.mode)
    path, _ = run_threshold_comparison(spec, bundle)
    print(f"wrote {path}")
    return 0


def _cmd_solve_threshold(args, bundle) -> int:
    geometry, device, _ = bundle
    r_th0 = baseline_threshold(device)
    approx = stmc_approx(r_th0, geometry)
    result = stmc_exact(r_th0, geometry)
    print(f"array {geometry.m} x {geometry.n}, r_w = {geometry.r_w:.4g}, "
          f"r_b = {geometry.r_b:.4g}")
    print(f"baseline threshold : {r_th0:.4g} ohm")
    print(f"stmc approx        : {approx:.4g} ohm")
    print(f"stmc exact         : {result.threshold:.4g} ohm "
          f"({result.iterations} iterations, "
          f"{'converged' if result.converged else 'NOT converged'}, "
          f"residual {result.residual:.2e})")
    print("# machine-readable")
    print(f"r_th0 = {format_sig(r_th0)}")
    print(f"stmc_approx = {format_sig(approx)}")
    print(f"stmc_exact = {format_sig(result.threshold)}")
    for k, value in enumerate(result.trace):
        print(f"trace[{k}] = {format_sig(value)}")
    if not result.converged:
        return 2
    return 0


def _cmd_validate(args, bundle) -> int:
    geometry, device, operating = bundle
    plan = SamplingPlan(n=args.samples, seed=args.seed, confidence=0.997,
                        tolerance=1.0)
    cells = corner_cells(geometry)
    empirical = estimate_channel_grid(cells, plan, bundle, mode=args.mode)
    failures = []
    print(f"{'cell':>12} {'param':>6} {'analytic':>12} {'empirical':>12} "
          f"{'ci_low':>12} {'ci_high':>12} {'ok':>4}")
    for (i, j) in cells:
        if args.mode == "ideal":
            line = i * geometry.r_b + j * geometry.r_w
            reset_fail, set_fail = marginal_switch_failures(line, device,
                                                            operating)
            p1 = (1.0 - device.q) * float(reset_fail[0])
            p2 = device.q * float(set_fail[0])
            p3, p4 = read_error_probabilities(line, operating.R_th, device)
            analytic = {"p1": p1, "p2": p2, "p3": float(p3), "p4": float(p4)}
        else:
            wp = write_channel_params(i, j, geometry, device, operating)
            read_plan = SamplingPlan(n=args.samples, seed=args.seed + 1,
                                     confidence=0.99, tolerance=5e-3)
            rp = read_channel_params_general(i, j, operating.I_th, geometry,
                                             device, operating, read_plan)
            analytic = {"p1": wp.p1, "p2": wp.p2, "p3": rp.p3, "p4": rp.p4}
            halfwidth = {"p1": 0.0, "p2": 0.0,
                         "p3": rp.p3_halfwidth, "p4": rp.p4_halfwidth}
        bac = empirical[(i, j)]
        for name in ("p1", "p2", "p3", "p4"):
            est = getattr(bac, name)
            if args.mode == "ideal":
                ok = est.covers(analytic[name])
            else:
                # the reference column is itself an estimate; require the
                # two confidence intervals to overlap
                hw = halfwidth[name]
                ok = (analytic[name] - hw <= est.ci_high
                      and analytic[name] + hw >= est.ci_low)
            if not ok:
                failures.append((i, j, name))
            print(f"{f'({i},{j})':>12} {name:>6} {analytic[name]:>12.4g} "
                  f"{est.rate:>12.4g} {est.ci_low:>12.4g} {est.ci_high:>12.4g} "
                  f"{'yes' if ok else 'NO':>4}")
    if failures:
        for (i, j, name) in failures:
            print(f"CI miss: cell ({i},{j}) parameter {name}", file=sys.stderr)
        return 2
    print("all analytic parameters inside their confidence intervals")
    return 0


def _cmd_show_config(args, bundle) -> int:
    sys.stdout.write(format_config(bundle))
    return 0


_COMMANDS = {
    "heatmap": _cmd_heatmap,
    "capacity-sweep": _cmd_capacity_sweep,
    "aspect-ratio": _cmd_aspect_ratio,
    "thresholds": _cmd_thresholds,
    "solve-threshold": _cmd_solve_threshold,
    "validate": _cmd_validate,
    "show-config": _cmd_show_config,
}


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        bundle = _load_bundle(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, bundle)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver/sampling failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
