"""Experiment orchestration: simulate, check, analyse blow-up, persist."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from estimates.admissibility import (
    ParamPair,
    Problem,
    SweepGrid,
    check_admissible,
    classical_pair,
    convexity_region_nonempty,
    nonzero_beta_pair,
    p_bar_closed,
    p_bar_sweep,
    raw_convexity_coefficient,
    special_case_p_le_1,
    threshold_report,
)
from estimates.blowup import (
    ccc_margin,
    check_lower_bound,
    check_min_growth,
    fit_solution,
    hamilton_pick_times,
    profile_bracket,
    profile_errors,
    profile_trend_ok,
    rescale,
    simple_pick_times,
)
from estimates.checks import (
    decay_margins,
    harnack_check,
    liyau_check,
    monotone_convex_check,
    sample_paths,
)
from estimates.errors import DomainError
from estimates.solver import Solution, evolve
from report.config import RunConfig
from report.context import ExperimentReport
from report.renderer import ReportRenderer
from report.storage import save_run, write_csv

logger = logging.getLogger(__name__)

APPENDIX_DIMENSIONS = tuple(range(1, 13))
REGION_DIMENSIONS = tuple(range(5, 11))
ORACLE_TOLERANCE = 2e-3
COUNTEREXAMPLE = (5, 1.1, 0.5, 0.6)


def worker_count() -> int:
    """Threads for sweeps: ``LIYAU_THREADS`` if set, else the CPU count."""

    raw = os.environ.get("LIYAU_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            logger.warning("ignoring LIYAU_THREADS=%r (not an integer)", raw)
        else:
            if value >= 1:
                return value
            logger.warning("ignoring LIYAU_THREADS=%r (must be >= 1)", raw)
    return os.cpu_count() or 1


def default_pairs(prob: Problem) -> list[ParamPair]:
    """(1, 1) for p <= 1, else the classical pair or, failing that, a grid pair."""

    if prob.p_float <= 1:
        return [special_case_p_le_1(prob)[0]]
    pair = classical_pair(prob)
    if check_admissible(prob, pair).admissible:
        return [pair]
    found = nonzero_beta_pair(prob)
    if found is None:
        raise DomainError(f"no admissible pair for n={prob.n}, p={prob.p_float}")
    return [found]


def _decay_horizon(sol: Solution) -> float:
    """Last time with u_max below the geometric mean of its first and last values."""

    t, m = sol.series_arrays()
    level = math.sqrt(m[0] * m[-1])
    below = t[m <= level]
    return float(below[-1]) if below.size else float(t[0])


def _blowup_stage(config: RunConfig, sol: Solution, report: ExperimentReport, prefix: Optional[str]):
    tol = config.tolerances
    toggles = config.checks
    p = sol.p
    fit = fit_solution(sol)
    tol_fit = tol.fit if tol.fit is not None else fit.tol_fit
    lower = check_lower_bound(sol.u_max_series, fit)
    if toggles.pick_rule == "hamilton":
        times = hamilton_pick_times(sol, fit, toggles.slices)
    else:
        times = simple_pick_times(sol, toggles.slices)
    slices = rescale(sol, times)
    exactness = max(abs(sl.center_value - 1.0) for sl in slices)
    ccc = ccc_margin(slices, eps=tol.ccc_eps)
    errors = profile_errors(slices, p)
    brackets = [profile_bracket(sl, p, fit.T_fit) for sl in slices]
    data = fit.to_dict()
    data.update(
        {
            "tol_fit_used": tol_fit,
            "lower_bound_margin": lower,
            "pick_rule": toggles.pick_rule,
            "pick_times": times,
            "rescaling_exactness": exactness,
            "ccc_margin": ccc,
            "profile_errors": errors,
            "profile_trend_ok": profile_trend_ok(errors, tol.trend_slack),
            "profile_bracket_margins": brackets,
            "min_growth_margin": check_min_growth(sol),
        }
    )
    passed = lower >= -tol_fit and exactness <= 1e-12 and ccc >= 0
    report.register_check("blowup", data, passed)
    if prefix:
        t, m = sol.series_arrays()
        before = t < fit.T_fit
        rows = zip(t[before], m[before], (q for _, q in fit.rate_series))
        report.add_artifact(write_csv(f"{prefix}_blowup.csv", ("t", "umax", "q"), rows))
    return fit


def run_experiment(config: RunConfig, prefix: Optional[str] = None) -> ExperimentReport:
    """Simulate, run the enabled checks for every pair, then the blow-up analysis."""

    prefix = prefix or config.output.prefix
    toggles = config.checks
    tol = config.tolerances
    report = ExperimentReport(title=config.title, config=config.to_dict(), notes=config.notes)

    sol: Optional[Solution] = None
    with report.stage("simulate") as details:
        sol = evolve(config.geometry, config.initial_data(), config.solver)
        details.append(f"{len(sol.snapshots)} snapshots")
        details.append(f"t_stop={sol.t_stop:.10g}")
        report.register_check(
            "simulate",
            {
                "blew_up": sol.blew_up,
                "t_stop": sol.t_stop,
                "snapshots": len(sol.snapshots),
                "steps": len(sol.u_max_series) - 1,
                "u_max_final": sol.u_max_series[-1][1],
            },
            None,
        )
        if prefix:
            for path in save_run(sol, prefix, config.to_dict()):
                report.add_artifact(path)
    if sol is None:
        return _finish(report, prefix, config)

    prob = Problem(config.geometry.n, config.solver.p)
    pairs = list(config.pairs)
    with report.stage("pairs") as details:
        if not pairs:
            pairs = default_pairs(prob)
            details.append("default pair")
        details.append(", ".join(str(pair.as_floats()) for pair in pairs))

    t_hi = toggles.liyau_t_fraction * sol.t_stop
    for index, pair in enumerate(pairs):
        label = f"[{index}]"
        if toggles.liyau:
            with report.stage(f"liyau{label}") as details:
                result = liyau_check(sol, pair, (0.0, t_hi), disc_factor=tol.disc_factor)
                allowed = max(tol.liyau_abs, max(result.tol_disc))
                data = result.to_dict()
                data["allowed"] = allowed
                report.register_check(f"liyau{label}", data, result.worst_margin >= -allowed)
                details.append(f"worst={result.worst_margin:.6g}")
                if prefix:
                    report.add_artifact(
                        write_csv(f"{prefix}_liyau_{index}.csv", ("t", "min_margin"), result.per_snapshot)
                    )

        if toggles.harnack:
            with report.stage(f"harnack{label}") as details:
                paths = sample_paths(
                    sol,
                    toggles.harnack_paths,
                    config.seed,
                    segments=toggles.harnack_segments,
                    t_range=(0.0, t_hi),
                )
                results = [harnack_check(sol, pair, path, tol_harnack=tol.harnack) for path in paths]
                dominance = all(r.rhs_simple >= r.rhs_full for r in results)
                data = {
                    "paths": len(results),
                    "holds_simple": sum(r.holds_simple for r in results),
                    "holds_full": sum(r.holds_full for r in results),
                    "max_ratio_simple": max(r.lhs / r.rhs_simple for r in results),
                    "max_ratio_full": max(r.lhs / r.rhs_full for r in results),
                    "dominance": dominance,
                    "seed": config.seed,
                }
                passed = dominance and all(r.holds_simple for r in results)
                report.register_check(f"harnack{label}", data, passed)
                details.append(f"{data['holds_simple']}/{len(results)} simple")
                if prefix:
                    rows = (
                        (r.path.x1, r.path.x2, r.path.t1, r.path.t2, r.lhs, r.rhs_full, r.rhs_simple)
                        for r in results
                    )
                    header = ("x1", "x2", "t1", "t2", "lhs", "rhs_full", "rhs_simple")
                    report.add_artifact(write_csv(f"{prefix}_harnack_{index}.csv", header, rows))

        if toggles.monotone:
            with report.stage(f"monotone{label}") as details:
                result = monotone_convex_check(
                    sol, pair, toggles.T0, convexity=toggles.convexity, disc_factor=tol.disc_factor
                )
                report.register_check(f"monotone{label}", result.to_dict(), result.within_tolerance)
                details.append(f"mono={result.mono_margin:.6g}")
                if prefix:
                    rows = ((t, m, "" if c is None else c) for t, m, c in result.per_snapshot)
                    report.add_artifact(
                        write_csv(f"{prefix}_monotone_{index}.csv", ("t", "mono_margin", "convex_margin"), rows)
                    )

    fit = None
    if toggles.blowup:
        with report.stage("blowup") as details:
            fit = _blowup_stage(config, sol, report, prefix)
            details.append(f"T_fit={fit.T_fit:.10g}")

    if toggles.decay:
        for index, pair in enumerate(pairs):
            with report.stage(f"decay[{index}]") as details:
                if toggles.T_bar is not None:
                    T_bar = toggles.T_bar
                elif fit is not None:
                    T_bar = fit.T_fit
                else:
                    raise DomainError("decay check needs checks.T_bar or a blow-up fit")
                horizon = _decay_horizon(sol)
                rows = decay_margins(sol, pair, T_bar, t_max=horizon)
                margin = min(m for _, m in rows)
                report.register_check(
                    f"decay[{index}]",
                    {"T_bar": T_bar, "t_max": horizon, "margin": margin, "snapshots": len(rows)},
                    margin >= 0,
                )
                details.append(f"margin={margin:.6g}")
                if prefix:
                    report.add_artifact(write_csv(f"{prefix}_decay_{index}.csv", ("t", "min_margin"), rows))

    return _finish(report, prefix, config)


def _finish(report: ExperimentReport, prefix: Optional[str], config: Optional[RunConfig] = None) -> ExperimentReport:
    if not prefix:
        return report
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    want_html = config.output.html if config is not None else True
    want_markdown = config.output.markdown if config is not None else True
    renderer = ReportRenderer()
    if want_html:
        path = f"{prefix}_report.html"
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(renderer.render_html(report))
        report.add_artifact(path)
    if want_markdown:
        path = f"{prefix}_report.md"
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(renderer.render_markdown(report))
        report.add_artifact(path)
    path = f"{prefix}_report.json"
    report.add_artifact(path)
    report.save(path)
    return report


def _appendix_row(n: int, grid: SweepGrid) -> tuple:
    if n == 1:
        closed = p_bar_closed(1)
        swept = p_bar_sweep(1, grid)
        return (1, closed, swept, None, None, None)
    row = threshold_report(n, grid)
    return (n, row.p_bar_closed, row.p_bar_sweep, row.ref_lower, row.ref_upper, row.ordering_ok)


def _region_row(n: int, p: float, grid: SweepGrid) -> tuple:
    prob = Problem(n, p)
    pair = convexity_region_nonempty(prob, grid)
    if pair is None:
        return (n, p, False, None, None, None)
    alpha, beta = pair.as_floats()
    return (n, p, True, alpha, beta, float(raw_convexity_coefficient(n, p, alpha, beta)))


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return value


def reproduce_appendix(
    prefix: Optional[str] = None,
    *,
    grid: Optional[SweepGrid] = None,
    region_grid: Optional[SweepGrid] = None,
    dimensions: Sequence[int] = APPENDIX_DIMENSIONS,
    region_dimensions: Sequence[int] = REGION_DIMENSIONS,
    region_points: int = 20,
    threads: Optional[int] = None,
) -> ExperimentReport:
    """Threshold table with the closed-form/sweep comparison and the convexity-region table."""

    grid = grid or SweepGrid()
    region_grid = region_grid or SweepGrid(points=200)
    threads = threads or worker_count()
    report = ExperimentReport(title="Threshold exponents and convexity region")

    table: list[tuple] = []
    with report.stage("thresholds") as details:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            table = list(pool.map(lambda n: _appendix_row(n, grid), dimensions))
        gaps = [abs(row[1] - row[2]) for row in table]
        ordering = [row[5] for row in table if row[5] is not None]
        data = {
            "dimensions": [row[0] for row in table],
            "max_closed_sweep_gap": max(gaps),
            "oracle_tolerance": ORACLE_TOLERANCE,
            "ordering_ok": all(ordering),
            "threads": threads,
        }
        report.register_check("thresholds", data, max(gaps) <= ORACLE_TOLERANCE and all(ordering))
        details.append(f"{len(table)} rows")
        if prefix:
            header = ("n", "p_bar_closed", "p_bar_sweep", "ref_lower", "ref_upper", "ordering_ok")
            rows = ([_cell(v) for v in row] for row in table)
            report.add_artifact(write_csv(f"{prefix}_appendix.csv", header, rows))

    with report.stage("convexity_region") as details:
        cases = [
            (n, float(p))
            for n in region_dimensions
            for p in np.linspace(1.01, 0.99 * p_bar_closed(n), region_points)
        ]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            region = list(pool.map(lambda case: _region_row(case[0], case[1], region_grid), cases))
        n_c, p_c, a_c, b_c = COUNTEREXAMPLE
        counter = check_admissible(Problem(n_c, p_c), ParamPair(a_c, b_c))
        counter_coefficient = float(raw_convexity_coefficient(n_c, p_c, a_c, b_c))
        empty = [(row[0], row[1]) for row in region if not row[2]]
        data = {
            "cases": len(region),
            "nonempty": len(region) - len(empty),
            "empty_cases": empty,
            "counterexample_admissible": counter.admissible,
            "counterexample_coefficient": counter_coefficient,
        }
        passed = not empty and counter.admissible and counter_coefficient < 0
        report.register_check("convexity_region", data, passed)
        details.append(f"{data['nonempty']}/{len(region)} nonempty")
        if prefix:
            header = ("n", "p", "nonempty", "alpha", "beta", "coefficient")
            rows = ([_cell(v) for v in row] for row in region)
            report.add_artifact(write_csv(f"{prefix}_region.csv", header, rows))

    return _finish(report, prefix)
