"""Blow-up time fit, type-I rate, rescaled slices and the minimum growth law."""

import math

import numpy as np
import pytest

from estimates.blowup import (
    ccc_margin,
    check_lower_bound,
    check_min_growth,
    fit_blowup_time,
    fit_solution,
    hamilton_pick_times,
    limit_profile_error,
    profile_bracket,
    profile_errors,
    profile_trend_ok,
    rescale,
    simple_pick_times,
)
from estimates.errors import DomainError, NoBlowupError
from estimates.geometry import Geometry
from estimates.solver import SolverConfig, evolve

from conftest import sinusoidal


def test_fit_on_constant_data(trivial_run) -> None:
    fit = fit_solution(trivial_run)

    assert fit.T_fit == pytest.approx(1.0, abs=1e-3)
    assert fit.q_limit == pytest.approx(1.0, abs=1e-2)
    assert fit.samples >= 50
    assert fit.slope < 0


def test_lower_bound_is_tight_on_constant_data(trivial_run) -> None:
    fit = fit_solution(trivial_run)
    margin = check_lower_bound(trivial_run.u_max_series, fit)

    assert margin >= -fit.tol_fit
    assert abs(margin) <= 1e-2


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_fit_with_cubic_nonlinearity(c) -> None:
    # u' = u³ from u0 = c blows up at T = 1/(2c²)
    geom = Geometry.torus(1.0, 32)
    cfg = SolverConfig(p=3.0, dt_max=1e-4, snapshot_interval=0.01)
    sol = evolve(geom, np.full(32, c), cfg)
    fit = fit_solution(sol)

    assert fit.T_fit == pytest.approx(0.5 / c**2, rel=1e-2)
    assert fit.q_limit == pytest.approx(0.5, abs=1e-2)
    assert fit.slope < 0


def test_fit_is_stable_under_step_halving() -> None:
    fits = []
    for dt_max in (2e-3, 1e-3):
        geom = Geometry.torus(2 * math.pi, 32)
        cfg = SolverConfig(p=2.0, dt_max=dt_max, snapshot_interval=0.1)
        fits.append(fit_solution(evolve(geom, sinusoidal(geom), cfg)))

    coarse, fine = fits
    assert abs(coarse.T_fit - fine.T_fit) <= 2e-3 * fine.T_fit


def test_fit_on_perturbed_torus(torus_p15_run) -> None:
    fit = fit_solution(torus_p15_run)

    assert fit.T_fit > torus_p15_run.t_stop
    assert fit.q_limit == pytest.approx(2.0, rel=0.2)
    assert check_lower_bound(torus_p15_run.u_max_series, fit) >= -fit.tol_fit


def test_rescaled_slices_on_perturbed_torus(torus_p15_run) -> None:
    sol = torus_p15_run
    slices = rescale(sol, simple_pick_times(sol, 3))

    assert len(slices) == 3
    assert all(abs(sl.center_value - 1.0) <= 1e-12 for sl in slices)
    assert ccc_margin(slices, eps=0.05) >= 0
    assert profile_trend_ok(profile_errors(slices, sol.p), 0.10)


def test_rescaled_constant_data_is_the_limit_profile(trivial_run) -> None:
    slices = rescale(trivial_run, simple_pick_times(trivial_run, 3))

    assert all(err <= 0.05 for err in profile_errors(slices, 2.0))
    assert limit_profile_error(slices[-1:], 2.0) <= 0.05
    assert all(0.0 in sl.s_grid for sl in slices)


def test_profile_bracket_on_constant_data(trivial_run) -> None:
    fit = fit_solution(trivial_run)
    slices = rescale(trivial_run, simple_pick_times(trivial_run, 2))

    assert all(profile_bracket(sl, 2.0, fit.T_fit) >= -0.05 for sl in slices)


def test_profile_trend_slack() -> None:
    assert profile_trend_ok([0.1, 0.105, 0.05])
    assert not profile_trend_ok([0.1, 0.2])
    assert profile_trend_ok([0.3])


def test_hamilton_pick_times_precede_blowup(trivial_run) -> None:
    fit = fit_solution(trivial_run)
    times = hamilton_pick_times(trivial_run, fit, 3)

    assert times == sorted(times)
    assert all(t < fit.T_fit for t in times)
    slices = rescale(trivial_run, times)
    assert all(sl.center_value == 1.0 for sl in slices)


def test_minimum_growth_law(torus_p15_run) -> None:
    assert check_min_growth(torus_p15_run) >= -1e-6


def test_no_blowup_errors(sphere_run) -> None:
    with pytest.raises(NoBlowupError):
        fit_solution(sphere_run)
    with pytest.raises(NoBlowupError):
        fit_blowup_time([(0.0, 1.0), (1.0, 2.0)], 2.0)
    with pytest.raises(DomainError):
        fit_blowup_time([(0.0, 1.0), (1.0, 2.0)], 1.0)


def test_fit_on_synthetic_series() -> None:
    T, p = 0.75, 2.0
    t = np.linspace(0.0, T - 1e-7, 2000)
    series = list(zip(t, 1.0 / ((p - 1.0) * (T - t))))
    fit = fit_blowup_time(series, p)

    assert fit.T_fit == pytest.approx(T, abs=1e-9)
    assert math.isclose(fit.q_limit, 1.0, abs_tol=1e-3)
