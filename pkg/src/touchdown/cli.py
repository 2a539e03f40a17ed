"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numerical or
output failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .analysis import InapplicableBoundError, analyze, lower_bound_T, upper_bound_T
from .config import RunConfig, from_dict, load_config
from .errors import NumericalError, TouchdownError, ValidationError
from .experiments import bisect_critical_height, perturbation_sweep
from .profiles import mu0
from .report import ReportIOError, dumps_report, write_report, write_snapshots
from .solver import solve

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3

# Defaults used by ``sweep`` and ``bisect`` when no profile/geometry is given.
SWEEP_DEFAULT = {"domain": {"kind": "radial_ball", "R": 0.5, "n": 1, "m": 400},
                 "profile": {"family": "convex_lambda", "params": {"mu": 10.0, "lambda": 0.1}}}
BISECT_GEOMETRY = {"c1": 0.3, "c2": 0.7, "r": 0.07, "mu": 80.0, "eta": 0.5, "pairs": True}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"value of {key} is not a number/boolean/list") from None


def _add_run_flags(sp):
    sp.add_argument("--config", help="JSON run configuration")
    sp.add_argument("--domain", choices=("interval", "radial_ball"), dest="kind")
    sp.add_argument("--R", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int, help="number of grid intervals")
    sp.add_argument("--family", help="profile family")
    sp.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                    help="profile parameter (repeatable)")
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps-stop", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--report", help="write the JSON report here (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="touchdown", description="Touchdown (quenching) experiments for "
                     "u_t - Lap u = f(x)(1-u)^(-p).")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("simulate", help="solve one problem and analyse it")
    _add_run_flags(sp)
    sp.add_argument("--snapshots", help="write t,x,u snapshot CSV here")

    sp = sub.add_parser("bounds", help="print the closed-form bounds on T and mu0")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mu", type=float, required=True, help="floor of f on the ball")
    sp.add_argument("--r", type=float, required=True, help="ball radius")
    sp.add_argument("--fmax", type=float, help="sup of f (default: mu)")

    sp = sub.add_parser("sweep", help="perturbation stability sweep")
    _add_run_flags(sp)
    sp.add_argument("--q", type=float, help="L^q exponent (inf allowed)")
    sp.add_argument("--sizes", type=float, nargs="+")
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("bisect", help="critical-height bisection on the two-annulus family")
    _add_run_flags(sp)
    sp.add_argument("--tol-h", type=float)
    sp.add_argument("--no-confirm", action="store_true", help="skip the refined-grid confirmation")

    sub.add_parser("verify", help="run the built-in invariant suite")
    return parser


def _config_from_args(args, base: dict | None = None) -> RunConfig:
    if args.config:
        data = load_config(args.config).to_dict()
    else:
        data = json.loads(json.dumps(base or {}))
    dom = data.setdefault("domain", {})
    for key, attr in (("kind", "kind"), ("R", "R"), ("n", "n"), ("m", "m")):
        if getattr(args, attr) is not None:
            dom[key] = getattr(args, attr)
    if args.family is not None or args.param:
        prof = data.setdefault("profile", {})
        if args.family is not None and args.family != prof.get("family"):
            prof["family"], prof["params"] = args.family, {}
        prof.setdefault("params", {}).update(dict(args.param))
    sol = data.setdefault("solver", {})
    for key, val in (("p", args.p), ("eps_stop", args.eps_stop), ("t_max", args.t_max)):
        if val is not None:
            sol[key] = val
    if args.report is not None:
        data.setdefault("output", {})["report"] = args.report
    if getattr(args, "snapshots", None) is not None:
        data.setdefault("output", {})["snapshots"] = args.snapshots
    exp = data.setdefault("experiment", {})
    if args.command in ("sweep", "bisect"):
        exp["kind"] = args.command
    if getattr(args, "q", None) is not None:
        exp["q"] = "inf" if math.isinf(args.q) else args.q
    if getattr(args, "sizes", None):
        exp["sizes"] = args.sizes
    if getattr(args, "tol_h", None) is not None:
        exp["tol_h"] = args.tol_h
    if args.command == "bisect" and exp.get("geometry") is None:
        exp["geometry"] = dict(BISECT_GEOMETRY)
    return from_dict(data)


def _emit(report, path) -> None:
    if path:
        write_report(report, path)
    else:
        sys.stdout.write(dumps_report(report))


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    grid = cfg.build_grid()
    traj = solve(grid, cfg.build_profile(grid), cfg.solver_config(), cfg.t_max)
    rep = analyze(traj, cfg.floor_ball(), cfg.analysis.floor_mu, cfg.regions(), cfg.analysis.monitor_J)
    _emit(rep, cfg.output.report)
    if cfg.output.snapshots:
        write_snapshots(traj, cfg.output.snapshots)
    print(f"terminated={rep.terminated} T_est={rep.T_est}", file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args) -> int:
    fmax = args.mu if args.fmax is None else args.fmax
    if not (args.p > 0 and args.r > 0 and fmax >= 0 and args.mu >= 0):
        raise ValidationError("need p > 0, r > 0, mu >= 0, fmax >= 0")
    m0 = mu0(args.p, args.n)
    print(f"T_lower={lower_bound_T(args.p, fmax):.7g}")
    try:
        print(f"T_upper={upper_bound_T(args.p, args.n, args.mu, args.r):.7g}")
    except InapplicableBoundError:
        print("T_upper=inapplicable")
    print(f"mu0={m0:.7g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args, SWEEP_DEFAULT)
    grid = cfg.build_grid()
    exp = cfg.experiment
    res = perturbation_sweep(cfg.build_profile(grid), cfg.solver_config(), exp.q, exp.sizes,
                             floor_ball=cfg.floor_ball(), floor_mu=cfg.analysis.floor_mu,
                             t_max=cfg.t_max, workers=max(1, args.workers))
    _emit(res, cfg.output.report)
    return EXIT_OK


def cmd_bisect(args) -> int:
    cfg = _config_from_args(args, {"domain": {"kind": "interval", "R": 1.0, "m": 400}})
    grid = cfg.build_grid()
    geo = cfg.geometry()
    tol = cfg.experiment.tol_h if cfg.experiment.tol_h is not None else 1e-3 * (2 * geo.mu - geo.eta)
    res = bisect_critical_height(grid, geo, cfg.solver_config(), tol, confirm=not args.no_confirm,
                                 t_max=cfg.t_max)
    _emit(res, cfg.output.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all
    results = run_all(sys.stdout)
    failed = [r.name for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {total:.1f} s")
    return EXIT_OK if not failed else EXIT_NUMERICAL


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "sweep": cmd_sweep,
            "bisect": cmd_bisect, "verify": cmd_verify}


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ReportIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TouchdownError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None) -> int:
    try:
        return run_cli(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
