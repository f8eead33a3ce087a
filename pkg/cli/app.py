"""Command-line entry points for the estimate toolkit.

Every subcommand prints one JSON object on stdout (``run`` and ``appendix``
print a summary unless ``--json`` asks for the full report) and returns an
exit code: 0 when everything checked holds, 1 when a check fails, 2 for
configuration or domain errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

from dotenv import load_dotenv

from cli.experiment import reproduce_appendix, run_experiment
from estimates import __version__
from estimates.admissibility import (
    ParamPair,
    Problem,
    SweepGrid,
    check_admissible,
    convexity_coefficient,
    convexity_region_nonempty,
    p_bar_closed,
    p_bar_sweep,
    scan_region,
    to_number,
)
from estimates.blowup import (
    ccc_margin,
    check_lower_bound,
    fit_solution,
    hamilton_pick_times,
    profile_errors,
    rescale,
    simple_pick_times,
)
from estimates.checks import (
    PathSpec,
    decay_margins,
    harnack_check,
    liyau_check,
    monotone_convex_check,
    sample_paths,
)
from estimates.errors import EstimateError
from estimates.solver import evolve
from estimates.statics import finite_difference_profile, parse_radii, profile_from_expression, static_residual, talenti_profile
from report.config import RunConfig
from report.storage import load_run, save_run, write_csv, write_json

logger = logging.getLogger(__name__)


def _emit(args: argparse.Namespace, payload: dict) -> None:
    """One JSON object on stdout; suppressed by --quiet."""

    if args.quiet:
        return
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def _pair(args: argparse.Namespace) -> ParamPair:
    return ParamPair(to_number(args.alpha), to_number(args.beta))


def _cmd_pbar(args: argparse.Namespace) -> int:
    rows = []
    for n in args.n:
        row = {"n": n, "p_bar_closed": p_bar_closed(n)}
        if args.sweep:
            row["p_bar_sweep"] = p_bar_sweep(n, SweepGrid(points=args.points))
        rows.append(row)
    if args.out:
        header = ("n", "p_bar_closed", "p_bar_sweep") if args.sweep else ("n", "p_bar_closed")
        write_csv(f"{args.out}_pbar.csv", header, (tuple(row.values()) for row in rows))
    _emit(args, rows[0] if len(rows) == 1 else {"rows": rows})
    return 0


def _cmd_admissible(args: argparse.Namespace) -> int:
    prob = Problem(args.n, to_number(args.p))
    result = check_admissible(prob, _pair(args))
    _emit(args, {"n": prob.n, "p": float(prob.p), **result.to_dict()})
    return 0 if result.admissible else 1


def _cmd_region(args: argparse.Namespace) -> int:
    prob = Problem(args.n, to_number(args.p))
    grid = SweepGrid(points=args.points)
    scan = scan_region(prob, grid)
    payload = scan.summary()
    if args.csv:
        header = ("alpha", "beta", "admissible", "cond2", "cond1_slack", "epsilon", "convexity_coeff")
        write_csv(args.csv, header, scan.rows())
        payload["csv"] = args.csv
    status = 0
    if args.convexity:
        pair = convexity_region_nonempty(prob, grid)
        if pair is None:
            payload["convexity_pair"] = None
            status = 1
        else:
            payload["convexity_pair"] = pair.to_dict()
            payload["convexity_coefficient"] = convexity_coefficient(prob, pair).to_dict()
    _emit(args, payload)
    return status


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config)
    prefix = args.out or config.output.prefix
    sol = evolve(config.geometry, config.initial_data(), config.solver)
    payload = {
        "blew_up": sol.blew_up,
        "t_stop": sol.t_stop,
        "snapshots": len(sol.snapshots),
        "u_max_final": sol.u_max_series[-1][1],
    }
    if prefix:
        payload["files"] = len(save_run(sol, prefix, config.to_dict()))
        payload["prefix"] = prefix
    _emit(args, payload)
    return 0


def _cmd_check_liyau(args: argparse.Namespace) -> int:
    sol = load_run(args.run)
    t_max = args.t_max if args.t_max is not None else sol.t_stop
    result = liyau_check(sol, _pair(args), (0.0, t_max), disc_factor=args.disc_factor)
    if args.out:
        write_csv(f"{args.out}_liyau.csv", ("t", "min_margin"), result.per_snapshot)
        write_json(f"{args.out}_liyau.json", result.to_dict())
    _emit(args, result.to_dict())
    return 0 if result.within_tolerance else 1


def _cmd_check_harnack(args: argparse.Namespace) -> int:
    sol = load_run(args.run)
    pair = _pair(args)
    if args.x1 is not None:
        paths = [PathSpec(args.x1, args.x2, args.t1, args.t2, args.segments)]
    else:
        t_range = (0.0, args.t_max) if args.t_max is not None else None
        paths = sample_paths(sol, args.paths, args.seed, segments=args.segments, t_range=t_range)
    results = [harnack_check(sol, pair, path, tol_harnack=args.tol) for path in paths]
    payload = {
        "paths": len(results),
        "holds_simple": sum(r.holds_simple for r in results),
        "holds_full": sum(r.holds_full for r in results),
        "results": [r.to_dict() for r in results],
    }
    if args.out:
        write_json(f"{args.out}_harnack.json", payload)
    _emit(args, payload)
    return 0 if all(r.holds_simple for r in results) else 1


def _cmd_check_mono(args: argparse.Namespace) -> int:
    sol = load_run(args.run)
    result = monotone_convex_check(sol, _pair(args), args.T0, convexity=args.convexity)
    if args.out:
        rows = ((t, m, "" if c is None else c) for t, m, c in result.per_snapshot)
        write_csv(f"{args.out}_monotone.csv", ("t", "mono_margin", "convex_margin"), rows)
        write_json(f"{args.out}_monotone.json", result.to_dict())
    _emit(args, result.to_dict())
    return 0 if result.within_tolerance else 1


def _cmd_check_decay(args: argparse.Namespace) -> int:
    sol = load_run(args.run)
    rows = decay_margins(sol, _pair(args), args.T_bar, t_max=args.t_max)
    margin = min(m for _, m in rows)
    if args.out:
        write_csv(f"{args.out}_decay.csv", ("t", "min_margin"), rows)
    _emit(args, {"T_bar": args.T_bar, "margin": margin, "snapshots": len(rows)})
    return 0 if margin >= 0 else 1


def _cmd_blowup(args: argparse.Namespace) -> int:
    sol = load_run(args.run)
    fit = fit_solution(sol)
    if args.pick_rule == "hamilton":
        times = hamilton_pick_times(sol, fit, args.slices)
    else:
        times = simple_pick_times(sol, args.slices)
    slices = rescale(sol, times)
    lower = check_lower_bound(sol.u_max_series, fit)
    payload = fit.to_dict()
    payload.update(
        {
            "lower_bound_margin": lower,
            "pick_rule": args.pick_rule,
            "pick_times": times,
            "ccc_margin": ccc_margin(slices),
            "profile_errors": profile_errors(slices, sol.p),
        }
    )
    if args.out:
        t, m = sol.series_arrays()
        before = t < fit.T_fit
        rows = zip(t[before], m[before], (q for _, q in fit.rate_series))
        write_csv(f"{args.out}_blowup.csv", ("t", "umax", "q"), rows)
        write_json(f"{args.out}_blowup.json", payload)
    _emit(args, payload)
    return 0 if lower >= -fit.tol_fit else 1


def _cmd_static_check(args: argparse.Namespace) -> int:
    if args.profile == "talenti":
        profile = talenti_profile()
    else:
        profile = profile_from_expression(args.profile, n=args.n, p=args.p)
    if args.fd_step is not None:
        analytic = profile
        profile = finite_difference_profile(
            lambda r: analytic(r)[0], profile.n, profile.p, h=args.fd_step, name=f"{profile.name} (fd)"
        )
    radii = parse_radii(args.radii)
    residual = static_residual(profile, radii)
    u, _, _ = profile(radii)
    if args.out:
        write_csv(f"{args.out}_static.csv", ("r", "u", "residual"), zip(radii, u, residual))
    worst = float(abs(residual).max())
    _emit(args, {"profile": profile.name, "n": profile.n, "p": profile.p, "radii": len(radii), "max_abs_residual": worst})
    return 0


def _cmd_appendix(args: argparse.Namespace) -> int:
    report = reproduce_appendix(args.out, grid=SweepGrid(points=args.points), threads=args.threads)
    _emit(args, report.to_dict() if args.json else {"overall_pass": report.overall_pass})
    return report.exit_code


def _cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config)
    report = run_experiment(config, args.out)
    if args.json:
        _emit(args, report.to_dict())
    else:
        summary = {record.stage: record.passed for record in report.checks}
        summary["errors"] = len(report.errors)
        summary["overall_pass"] = report.overall_pass
        _emit(args, summary)
    return report.exit_code


def _add_pair_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--run", required=True, help="prefix of a stored run")
    parser.add_argument("--alpha", required=True, help="alpha, e.g. 1 or 2/3")
    parser.add_argument("--beta", required=True, help="beta, e.g. 0.5 or 2/3")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output prefix for CSV/JSON files")
    common.add_argument("--json", action="store_true", help="print the full report (run, appendix)")
    common.add_argument("--quiet", action="store_true", help="only errors on stderr")
    common.add_argument("--verbose", action="store_true", help="informational logging")

    parser = argparse.ArgumentParser(description="Li-Yau estimates toolkit for u_t = Δu + u^p")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_pbar = sub.add_parser("pbar", parents=[common], help="Threshold exponent p̄ₙ")
    p_pbar.add_argument("--n", type=int, nargs="+", required=True)
    p_pbar.add_argument("--sweep", action="store_true", help="also compute the grid sweep")
    p_pbar.add_argument("--points", type=int, default=400)
    p_pbar.set_defaults(func=_cmd_pbar)

    p_adm = sub.add_parser("admissible", parents=[common], help="Check one (alpha, beta) pair")
    p_adm.add_argument("--n", type=int, required=True)
    p_adm.add_argument("--p", required=True)
    p_adm.add_argument("--alpha", required=True)
    p_adm.add_argument("--beta", required=True)
    p_adm.set_defaults(func=_cmd_admissible)

    p_region = sub.add_parser("region", parents=[common], help="Map the admissible region")
    p_region.add_argument("--n", type=int, required=True)
    p_region.add_argument("--p", required=True)
    p_region.add_argument("--points", type=int, default=200)
    p_region.add_argument("--csv", default=None, help="write the full grid here")
    p_region.add_argument("--convexity", action="store_true", help="search the convexity region too")
    p_region.set_defaults(func=_cmd_region)

    p_sim = sub.add_parser("simulate", parents=[common], help="Run the solver from a config")
    p_sim.add_argument("--config", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ly = sub.add_parser("check-liyau", parents=[common], help="Li-Yau margins of a stored run")
    _add_pair_args(p_ly)
    p_ly.add_argument("--t-max", type=float, default=None)
    p_ly.add_argument("--disc-factor", type=float, default=10.0)
    p_ly.set_defaults(func=_cmd_check_liyau)

    p_h = sub.add_parser("check-harnack", parents=[common], help="Harnack inequality on sampled paths")
    _add_pair_args(p_h)
    p_h.add_argument("--paths", type=int, default=20)
    p_h.add_argument("--seed", type=int, default=0)
    p_h.add_argument("--segments", type=int, default=16)
    p_h.add_argument("--tol", type=float, default=0.05)
    p_h.add_argument("--t-max", type=float, default=None)
    p_h.add_argument("--x1", type=int, default=None)
    p_h.add_argument("--x2", type=int, default=None)
    p_h.add_argument("--t1", type=float, default=None)
    p_h.add_argument("--t2", type=float, default=None)
    p_h.set_defaults(func=_cmd_check_harnack)

    p_m = sub.add_parser("check-mono", parents=[common], help="Monotonicity/convexity margins")
    _add_pair_args(p_m)
    p_m.add_argument("--T0", type=float, default=0.0)
    p_m.add_argument("--convexity", action=argparse.BooleanOptionalAction, default=None)
    p_m.set_defaults(func=_cmd_check_mono)

    p_d = sub.add_parser("check-decay", parents=[common], help="Upper decay bound")
    _add_pair_args(p_d)
    p_d.add_argument("--T-bar", dest="T_bar", type=float, required=True)
    p_d.add_argument("--t-max", type=float, default=None)
    p_d.set_defaults(func=_cmd_check_decay)

    p_b = sub.add_parser("blowup", parents=[common], help="Blow-up fit and rescaling")
    p_b.add_argument("--run", required=True)
    p_b.add_argument("--pick-rule", choices=("simple", "hamilton"), default="simple")
    p_b.add_argument("--slices", type=int, default=3)
    p_b.set_defaults(func=_cmd_blowup)

    p_s = sub.add_parser("static-check", parents=[common], help="Static residual of a radial profile")
    p_s.add_argument("--profile", default="talenti", help="'talenti' or an expression in r")
    p_s.add_argument("--n", type=int, default=6)
    p_s.add_argument("--p", type=float, default=2.0)
    p_s.add_argument("--radii", default="0:10:0.1", help="a:b:step or a comma list")
    p_s.add_argument("--fd-step", type=float, default=None, help="use finite differences with this step")
    p_s.set_defaults(func=_cmd_static_check)

    p_app = sub.add_parser("appendix", parents=[common], help="Threshold and convexity tables")
    p_app.add_argument("--points", type=int, default=400)
    p_app.add_argument("--threads", type=int, default=None)
    p_app.set_defaults(func=_cmd_appendix)

    p_run = sub.add_parser("run", parents=[common], help="Full experiment from a config")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_run)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if args.verbose:
        level = logging.INFO
    if args.quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


PATH_FLAGS = ("x1", "x2", "t1", "t2")


def _check_path_flags(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if args.command != "check-harnack":
        return
    given = [getattr(args, name) is not None for name in PATH_FLAGS]
    if any(given) and not all(given):
        parser.error("--x1, --x2, --t1 and --t2 must be given together")


def main(argv: Optional[list[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_path_flags(parser, args)
    _configure_logging(args)
    try:
        return int(args.func(args))
    except ValueError as exc:
        # ConfigError, DomainError and TimeSpanError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimateError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
