"""RK4 method-of-lines solver: ODE oracles, stopping rules and Talenti drift."""

import math

import numpy as np
import pytest

from estimates.errors import DomainError, TimeSpanError
from estimates.geometry import Geometry
from estimates.solver import SolverConfig, evolve, max_series, trivial_solution, trivial_value
from estimates.statics import talenti_value


def test_constant_data_follows_the_ode() -> None:
    geom = Geometry.torus(2 * math.pi, 64)
    cfg = SolverConfig(p=2.0, dt_max=1e-4, snapshot_interval=0.05, t_end=0.9)
    sol = evolve(geom, np.ones(64), cfg)

    t, u = sol.snapshots[-1]
    assert t == 0.9
    assert not sol.blew_up
    assert np.max(np.abs(u - 10.0)) / 10.0 <= 1e-6


def test_reaction_coefficient_scales_the_ode() -> None:
    geom = Geometry.torus(1.0, 32)
    cfg = SolverConfig(p=2.0, dt_max=1e-4, snapshot_interval=0.1, t_end=0.4, a=2.0)
    sol = evolve(geom, np.ones(32), cfg)

    assert sol.snapshots[-1][1][0] == pytest.approx(5.0, rel=1e-6)
    assert sol.a == 2.0


def test_blow_up_time_of_half_constant_data() -> None:
    geom = Geometry.torus(2 * math.pi, 32)
    cfg = SolverConfig(p=2.0, dt_max=1e-4, snapshot_interval=0.1)
    sol = evolve(geom, np.full(32, 0.5), cfg)

    assert sol.blew_up
    assert sol.t_stop == pytest.approx(2.0, rel=1e-2)
    assert sol.u_max_series[-1][1] >= cfg.blowup_cutoff


def test_trivial_run_series_is_nondecreasing(trivial_run) -> None:
    series = max_series(trivial_run)
    values = [m for _, m in series]

    assert trivial_run.blew_up
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert series[0] == (0.0, 1.0)


def test_empty_run_has_single_entry() -> None:
    geom = Geometry.torus(1.0, 16)
    u0 = np.linspace(1.0, 2.0, 16)
    sol = evolve(geom, u0, SolverConfig(p=2.0, dt_max=1e-3, snapshot_interval=0.1, t_end=0.0))

    assert sol.u_max_series == [(0.0, 2.0)]
    assert len(sol.snapshots) == 1
    assert sol.t_stop == 0.0


def test_snapshots_land_on_interval_for_sublinear_exponent() -> None:
    geom = Geometry.torus(1.0, 32)
    cfg = SolverConfig(p=0.5, dt_max=1e-3, snapshot_interval=0.05, t_end=0.2)
    sol = evolve(geom, np.ones(32), cfg)

    assert list(sol.times) == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
    assert not sol.blew_up


def test_field_at_interpolates_between_snapshots(trivial_run) -> None:
    times = trivial_run.times
    assert trivial_run.field_at(times[3]) is trivial_run.snapshots[3][1]

    mid = 0.5 * (times[3] + times[4])
    value = trivial_run.field_at(mid)[0]
    assert trivial_run.snapshots[3][1][0] < value < trivial_run.snapshots[4][1][0]

    with pytest.raises(TimeSpanError):
        trivial_run.field_at(trivial_run.t_stop + 1.0)


def test_talenti_seed_drifts_at_truncation_order() -> None:
    drifts = {}
    for num_points in (256, 512):
        geom = Geometry.euclidean(6, 10.0, num_points)
        u0 = talenti_value(geom.coordinates)
        cfg = SolverConfig(p=2.0, dt_max=1e-3, snapshot_interval=0.01, t_end=0.01)
        sol = evolve(geom, u0, cfg)
        mask = geom.checked_mask()
        drifts[num_points] = (np.max(np.abs(sol.snapshots[-1][1] - u0)[mask]), geom.spacing**2)

    fine, h2 = drifts[512]
    coarse, _ = drifts[256]
    assert coarse / fine >= 3.0
    assert fine < 30.0 * h2


def test_step_halving_shows_fourth_order() -> None:
    # coarse grid so that dt_max, not the diffusive limit, sets the step
    geom = Geometry.torus(2 * math.pi, 16)
    u0 = 1.0 + 0.5 * np.sin(geom.coordinates)
    finals = []
    for dt_max in (0.02, 0.01, 0.005):
        cfg = SolverConfig(p=2.0, dt_max=dt_max, snapshot_interval=0.2, t_end=0.2)
        finals.append(evolve(geom, u0, cfg).snapshots[-1][1])

    coarse = np.max(np.abs(finals[0] - finals[1]))
    fine = np.max(np.abs(finals[1] - finals[2]))
    assert fine < coarse
    assert coarse / fine >= 10.0


def test_trivial_solution_matches_closed_form() -> None:
    geom = Geometry.torus(1.0, 16)
    sol = trivial_solution(geom, 3.0, 0.5, [0.0, 0.1, 0.2])

    assert sol.snapshots[2][1][0] == pytest.approx(float(trivial_value(3.0, 0.5, 0.2)))
    assert sol.u_max_series[0][1] == pytest.approx(1.0)
    with pytest.raises(TimeSpanError):
        trivial_solution(geom, 3.0, 0.5, [0.1, 0.6])
    with pytest.raises(DomainError):
        trivial_solution(geom, 1.0, 0.5, [0.1])


def test_solver_config_validation() -> None:
    with pytest.raises(DomainError):
        SolverConfig(p=1.0, dt_max=1e-3, snapshot_interval=0.1)
    with pytest.raises(DomainError):
        SolverConfig(p=2.0, dt_max=0.0, snapshot_interval=0.1)
    with pytest.raises(DomainError):
        SolverConfig(p=2.0, dt_max=1e-3, snapshot_interval=0.1, snapshot_growth=1.0)


def test_evolve_rejects_bad_initial_data() -> None:
    geom = Geometry.torus(1.0, 16)
    cfg = SolverConfig(p=2.0, dt_max=1e-3, snapshot_interval=0.1, blowup_cutoff=5.0)

    with pytest.raises(DomainError):
        evolve(geom, np.zeros(16), cfg)
    with pytest.raises(DomainError):
        evolve(geom, np.full(16, 6.0), cfg)
    with pytest.raises(DomainError):
        evolve(geom, np.ones(8), cfg)
