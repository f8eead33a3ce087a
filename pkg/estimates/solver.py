"""Method-of-lines RK4 integrator for u_t = Δu + a·uᵖ with blow-up detection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from estimates.errors import DomainError, InstabilityError, PositivityLossError, TimeSpanError
from estimates.geometry import Geometry, interpolate, laplacian

logger = logging.getLogger(__name__)

# relative growth of u_max allowed per step near blow-up
GROWTH_PER_STEP = 0.05


@dataclass(frozen=True)
class SolverConfig:
    """Step control and stopping rules.

    ``snapshot_growth`` adds a snapshot whenever u_max has grown by that
    factor since the previous one, which keeps the blow-up phase resolved.
    ``a`` is the reaction coefficient (1 for the standard equation).
    """

    p: float
    dt_max: float
    snapshot_interval: float
    cfl: float = 0.4
    blowup_cutoff: float = 1e8
    t_end: Optional[float] = None
    snapshot_growth: Optional[float] = None
    max_halvings: int = 40
    max_steps: int = 5_000_000
    a: float = 1.0

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise DomainError(f"p must be > 0, got {self.p}")
        if not self.dt_max > 0:
            raise DomainError(f"dt_max must be > 0, got {self.dt_max}")
        if not 0 < self.cfl <= 1:
            raise DomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.snapshot_interval > 0:
            raise DomainError(f"snapshot_interval must be > 0, got {self.snapshot_interval}")
        if self.t_end is not None and self.t_end < 0:
            raise DomainError(f"t_end must be >= 0, got {self.t_end}")
        if self.snapshot_growth is not None and not self.snapshot_growth > 1:
            raise DomainError(f"snapshot_growth must be > 1, got {self.snapshot_growth}")
        if not self.a > 0:
            raise DomainError(f"reaction coefficient a must be > 0, got {self.a}")
        if self.p <= 1 and self.t_end is None:
            raise DomainError("p <= 1 does not blow up; t_end is required")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "dt_max": self.dt_max,
            "snapshot_interval": self.snapshot_interval,
            "cfl": self.cfl,
            "blowup_cutoff": self.blowup_cutoff,
            "t_end": self.t_end,
            "snapshot_growth": self.snapshot_growth,
            "max_halvings": self.max_halvings,
            "max_steps": self.max_steps,
            "a": self.a,
        }


@dataclass(frozen=True)
class Solution:
    geometry: Geometry
    p: float
    snapshots: list[tuple[float, np.ndarray]]
    blew_up: bool
    t_stop: float
    u_max_series: list[tuple[float, float]] = field(default_factory=list)
    a: float = 1.0

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def series_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        data = np.asarray(self.u_max_series, dtype=float)
        return data[:, 0], data[:, 1]

    def field_at(self, t: float) -> np.ndarray:
        """Field at time ``t``, log-linear in time between snapshots."""

        times = self.times
        if t < times[0] or t > times[-1]:
            raise TimeSpanError(f"t = {t} outside stored span [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="left"))
        if times[k] == t:
            return self.snapshots[k][1]
        t0, u0 = self.snapshots[k - 1]
        t1, u1 = self.snapshots[k]
        w = (t - t0) / (t1 - t0)
        return np.exp((1.0 - w) * np.log(u0) + w * np.log(u1))

    def value_at(self, t: float, positions) -> np.ndarray:
        return interpolate(self.geometry, self.field_at(t), positions)


def _rk4_step(rhs: Callable[[np.ndarray], np.ndarray], u: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(geom: Geometry, u0, cfg: SolverConfig) -> Solution:
    """Integrate until ``t_end`` or until max u reaches ``blowup_cutoff``.

    Steps are clipped so snapshot times and ``t_end`` are hit exactly. A
    step producing a non-positive value is retried with half the step.
    """

    u = geom.validate_field(u0).copy()
    if not np.all(np.isfinite(u)):
        raise DomainError("initial data must be finite")
    if np.any(u <= 0):
        raise DomainError("initial data must be strictly positive")
    u_max = float(u.max())
    if cfg.blowup_cutoff <= u_max:
        raise DomainError(f"blowup_cutoff {cfg.blowup_cutoff} must exceed the initial max {u_max}")

    p, a = float(cfg.p), float(cfg.a)
    h = geom.spacing
    dt_diffusive = cfg.cfl * h * h / (2.0 * geom.n)

    def rhs(v: np.ndarray) -> np.ndarray:
        return laplacian(geom, v) + a * v**p

    t = 0.0
    snapshots: list[tuple[float, np.ndarray]] = [(0.0, u.copy())]
    series: list[tuple[float, float]] = [(0.0, u_max)]
    snap_index = 1
    next_snap = cfg.snapshot_interval
    last_snap_max = u_max
    blew_up = False
    steps = 0
    rejected = 0

    while cfg.t_end is None or t < cfg.t_end:
        if steps >= cfg.max_steps:
            logger.warning("stopping after max_steps=%d at t=%.6g", cfg.max_steps, t)
            break
        dt = min(cfg.dt_max, dt_diffusive)
        if p > 1:
            dt = min(dt, GROWTH_PER_STEP * u_max ** (1.0 - p) / (a * (p - 1.0)))
        target = next_snap if cfg.t_end is None else min(next_snap, cfg.t_end)
        landing = t + dt >= target
        if landing:
            dt = target - t

        for _ in range(cfg.max_halvings + 1):
            candidate = _rk4_step(rhs, u, dt)
            if not np.all(np.isfinite(candidate)):
                raise InstabilityError(f"non-finite values at t={t:.6g} (dt={dt:.3g})")
            if np.all(candidate > 0):
                break
            dt *= 0.5
            landing = False
            rejected += 1
        else:
            raise PositivityLossError(
                f"non-positive values persist at t={t:.6g} after {cfg.max_halvings} halvings"
            )

        u = candidate
        t = target if landing else t + dt
        steps += 1
        u_max = float(u.max())
        series.append((t, u_max))
        if steps % 10000 == 0:
            logger.debug("step %d t=%.6g dt=%.3g u_max=%.6g", steps, t, dt, u_max)

        if u_max >= cfg.blowup_cutoff:
            blew_up = True
            break

        take = False
        if landing and t == next_snap:
            snap_index += 1
            next_snap = snap_index * cfg.snapshot_interval
            take = True
        if cfg.snapshot_growth is not None and u_max >= cfg.snapshot_growth * last_snap_max:
            take = True
        if take:
            snapshots.append((t, u.copy()))
            last_snap_max = u_max

    if snapshots[-1][0] != t:
        snapshots.append((t, u.copy()))

    reason = "blow-up cutoff" if blew_up else "end time"
    logger.info(
        "stopped at t=%.8g (%s) after %d steps, %d rejected, %d snapshots",
        t,
        reason,
        steps,
        rejected,
        len(snapshots),
    )
    return Solution(
        geometry=geom,
        p=p,
        snapshots=snapshots,
        blew_up=blew_up,
        t_stop=t,
        u_max_series=series,
        a=a,
    )


def max_series(sol: Solution) -> list[tuple[float, float]]:
    if not sol.u_max_series:
        raise DomainError("solution has no recorded maxima")
    return list(sol.u_max_series)


def trivial_value(p: float, T: float, t):
    """Spatially constant solution ((p−1)(T−t))^{−1/(p−1)}."""

    return ((p - 1.0) * (T - np.asarray(t, dtype=float))) ** (-1.0 / (p - 1.0))


def trivial_solution(geom: Geometry, p: float, T: float, times: Sequence[float]) -> Solution:
    """Closed-form Solution of the spatially constant ODE u' = uᵖ blowing up at T."""

    if p <= 1:
        raise DomainError("the trivial blow-up solution needs p > 1")
    times = [float(t) for t in times]
    if not times or any(b <= a for a, b in zip(times, times[1:])):
        raise TimeSpanError("times must be nonempty and strictly increasing")
    if times[-1] >= T:
        raise TimeSpanError(f"all times must precede the blow-up time {T}")
    snapshots = [(t, np.full(geom.num_points, float(trivial_value(p, T, t)))) for t in times]
    series = [(t, float(snap[0])) for t, snap in snapshots]
    return Solution(
        geometry=geom,
        p=float(p),
        snapshots=snapshots,
        blew_up=False,
        t_stop=times[-1],
        u_max_series=series,
    )
