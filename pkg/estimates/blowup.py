"""Blow-up analysis: time fit, type-I rate, rescaled slices and the minimum growth law."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from estimates.errors import DegenerateWindowError, DomainError, NoBlowupError, TimeSpanError
from estimates.geometry import geodesic_distance
from estimates.solver import Solution

logger = logging.getLogger(__name__)


@dataclass
class BlowupFit:
    p: float
    T_fit: float
    window: tuple[float, float]
    rate_series: list[tuple[float, float]]
    q_limit: float
    residual: float
    extrapolation_error: float
    c_q: float
    slope: float
    samples: int

    @property
    def tol_fit(self) -> float:
        return 3.0 * (self.residual + self.extrapolation_error)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "T_fit": self.T_fit,
            "window": list(self.window),
            "q_limit": self.q_limit,
            "q_expected": 1.0 / (self.p - 1.0),
            "c_q": self.c_q,
            "residual": self.residual,
            "extrapolation_error": self.extrapolation_error,
            "tol_fit": self.tol_fit,
            "slope": self.slope,
            "samples": self.samples,
        }


@dataclass
class RescaledSlice:
    """u_k(x, s) = u(x, s/λ + t_k) / u(x_k, t_k) with λ = u(x_k, t_k)^{p-1}."""

    k_index: int
    base_node: int
    base_point: float
    base_time: float
    scale: float
    s_grid: np.ndarray
    values: np.ndarray
    distance: np.ndarray
    center_value: float = 1.0

    def to_dict(self) -> dict:
        return {
            "k_index": self.k_index,
            "base_node": self.base_node,
            "base_point": self.base_point,
            "base_time": self.base_time,
            "scale": self.scale,
            "s_range": [float(self.s_grid[0]), float(self.s_grid[-1])],
            "center_value": self.center_value,
            "max_value": float(self.values.max()),
        }


def _series_arrays(series) -> tuple[np.ndarray, np.ndarray]:
    data = np.asarray(series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] == 0:
        raise DomainError("series must be a nonempty list of (t, u_max) pairs")
    return data[:, 0], data[:, 1]


def fit_blowup_time(
    series: Sequence[tuple[float, float]],
    p: float,
    *,
    window_factor: float = 10.0,
    min_samples: int = 50,
) -> BlowupFit:
    """Fit u_max^{1-p} ≈ c(T - t) on the window where u_max >= 10·u_max(0).

    Residuals are relative, c(T - t)/v - 1, so the late samples close to the
    singularity fix the root. The line is anchored at the last sample t_w,
    v ≈ c(t_w - t) + d with T = t_w + d/c, and the weighted design matrix is
    column-scaled before ``lstsq``: v spans many decades near the cutoff.
    """

    if p <= 1:
        raise DomainError(f"blow-up fitting needs p > 1, got {p}")
    t, m = _series_arrays(series)
    threshold = window_factor * m[0]
    in_window = m >= threshold
    if not in_window.any():
        raise NoBlowupError(f"u_max never reaches {threshold:.6g} (x{window_factor} the initial max)")
    start = int(np.argmax(in_window))
    tw, mw = t[start:], m[start:]
    if tw.size < min_samples:
        raise DegenerateWindowError(f"only {tw.size} samples in the fitting window, need {min_samples}")

    v = mw ** (1.0 - p)
    anchor = tw[-1]
    design = np.column_stack(((anchor - tw) / v, 1.0 / v))
    norms = np.linalg.norm(design, axis=0)
    if not np.all(norms > 0):
        raise DegenerateWindowError("fitting window has a degenerate design matrix")
    scaled, *_ = np.linalg.lstsq(design / norms, np.ones_like(v), rcond=None)
    c, d = scaled / norms
    if not c > 0:
        raise DegenerateWindowError(f"fitted slope {-c:.6g} is not negative")
    if not d > 0:
        raise DegenerateWindowError(f"fitted blow-up time precedes the last sample {anchor:.10g}")
    T_fit = anchor + d / c
    slope = -c

    relative = design @ np.array([c, d]) - 1.0
    residual = float(np.sqrt(np.mean(relative**2)))
    last_decade = mw >= mw[-1] / 10.0
    extrapolation = float(np.max(np.abs(relative[last_decade])))

    before = t < T_fit
    q = m[before] ** (p - 1.0) * (T_fit - t[before])
    q_window = mw ** (p - 1.0) * (T_fit - tw)
    fit = BlowupFit(
        p=float(p),
        T_fit=float(T_fit),
        window=(float(tw[0]), float(tw[-1])),
        rate_series=list(zip(t[before].tolist(), q.tolist())),
        q_limit=float(np.mean(q_window[last_decade])),
        residual=residual,
        extrapolation_error=extrapolation,
        c_q=float(np.max(q_window)),
        slope=float(slope),
        samples=int(tw.size),
    )
    logger.info("blow-up fit T=%.10g q_limit=%.6g residual=%.3e", fit.T_fit, fit.q_limit, residual)
    return fit


def fit_solution(sol: Solution, **kwargs) -> BlowupFit:
    if not sol.blew_up:
        raise NoBlowupError(f"run stopped at t={sol.t_stop} without reaching the blow-up cutoff")
    return fit_blowup_time(sol.u_max_series, sol.p, **kwargs)


def check_lower_bound(series: Sequence[tuple[float, float]], fit: BlowupFit) -> float:
    """Relative margin min_t u_max(t)·[(p-1)(T_fit - t)]^{1/(p-1)} - 1."""

    p = fit.p
    if p <= 1:
        raise DomainError("the lower bound needs p > 1")
    t, m = _series_arrays(series)
    before = t < fit.T_fit
    ratio = m[before] * ((p - 1.0) * (fit.T_fit - t[before])) ** (1.0 / (p - 1.0))
    return float(np.min(ratio) - 1.0)


def rescale(
    sol: Solution,
    k_times: Sequence[float],
    p: Optional[float] = None,
    *,
    s_window: tuple[float, float] = (-5.0, 0.5),
    s_points: int = 41,
) -> list[RescaledSlice]:
    """Build u_k around the spatial maximum at each t_k (lowest node on ties)."""

    p = sol.p if p is None else float(p)
    if p <= 1:
        raise DomainError("rescaling needs p > 1")
    times = sol.times
    geom = sol.geometry
    coords = geom.coordinates
    # the limit profile is finite only for s < 1/(p-1)
    s_cap = min(s_window[1], 0.9 / (p - 1.0))
    slices = []
    for k, t_k in enumerate(k_times):
        if t_k < times[0] or t_k > times[-1]:
            raise TimeSpanError(f"t_k = {t_k} outside stored span [{times[0]}, {times[-1]}]")
        base = sol.field_at(t_k)
        x_k = int(np.argmax(base))
        scale = float(base[x_k])
        lam = scale ** (p - 1.0)
        s_lo = max(s_window[0], lam * (times[0] - t_k))
        s_hi = min(s_cap, lam * (times[-1] - t_k))
        s_grid = np.union1d(np.linspace(s_lo, s_hi, s_points), [0.0])
        values = np.empty((s_grid.size, geom.num_points))
        for row, s in enumerate(s_grid):
            t = t_k if s == 0.0 else min(max(s / lam + t_k, times[0]), times[-1])
            values[row] = sol.field_at(t) / scale
        distance = np.array(
            [geodesic_distance(geom, x_k, j) for j in range(geom.num_points)]
        ) * math.sqrt(lam)
        zero_row = int(np.searchsorted(s_grid, 0.0))
        slices.append(
            RescaledSlice(
                k_index=k,
                base_node=x_k,
                base_point=float(coords[x_k]),
                base_time=float(t_k),
                scale=scale,
                s_grid=s_grid,
                values=values,
                distance=distance,
                center_value=float(values[zero_row, x_k]),
            )
        )
    return slices


def limit_profile(p: float, s) -> np.ndarray:
    """Spatially constant limit [1 - (p-1)s]^{-1/(p-1)}."""

    return (1.0 - (p - 1.0) * np.asarray(s, dtype=float)) ** (-1.0 / (p - 1.0))


def profile_errors(slices: Sequence[RescaledSlice], p: float, *, radius: float = 1.0) -> list[float]:
    """Max deviation from the limit profile over nodes within rescaled ``radius`` of x_k."""

    errors = []
    for sl in slices:
        near = sl.distance <= radius
        target = limit_profile(p, sl.s_grid)[:, None]
        errors.append(float(np.max(np.abs(sl.values[:, near] - target))))
    return errors


def limit_profile_error(slices: Sequence[RescaledSlice], p: float, *, radius: float = 1.0) -> float:
    if not slices:
        raise DomainError("no slices given")
    return profile_errors(slices, p, radius=radius)[-1]


def profile_trend_ok(errors: Sequence[float], slack: float = 0.10) -> bool:
    """Errors nonincreasing along the slices within a relative ``slack``."""

    return all(b <= a * (1.0 + slack) for a, b in zip(errors, errors[1:]))


def ccc_margin(slices: Sequence[RescaledSlice], *, eps: float = 0.05, omega: float = 0.0) -> float:
    """min over slices of (1 + eps) - max u_k(x, s) for s <= omega."""

    margins = []
    for sl in slices:
        rows = sl.s_grid <= omega
        margins.append(1.0 + eps - float(sl.values[rows].max()))
    return min(margins)


def profile_bracket(sl: RescaledSlice, p: float, T_fit: float) -> float:
    """Relative margin of max_x u_k^{p-1}(s) >= 1/((p-1)(C_k - s)), C_k = λ(T_fit - t_k)."""

    lam = sl.scale ** (p - 1.0)
    C_k = lam * (T_fit - sl.base_time)
    rows = sl.s_grid < C_k
    peak = sl.values[rows].max(axis=1) ** (p - 1.0)
    return float(np.min(peak * (p - 1.0) * (C_k - sl.s_grid[rows])) - 1.0)


def simple_pick_times(sol: Solution, count: int = 3) -> list[float]:
    """The last ``count`` snapshot times."""

    times = sol.times
    return [float(t) for t in times[-count:]]


def hamilton_pick_time(sol: Solution, p: float, T: float, k: int) -> float:
    """Snapshot time maximising u_max(t)^{p-1}(T - 1/k - t) over t < T - 1/k."""

    horizon = T - 1.0 / k
    candidates = [(t, float(u.max())) for t, u in sol.snapshots if t < horizon]
    if not candidates:
        raise TimeSpanError(f"no snapshot before T - 1/k = {horizon}")
    scores = [m ** (p - 1.0) * (horizon - t) for t, m in candidates]
    return candidates[int(np.argmax(scores))][0]


def hamilton_pick_times(sol: Solution, fit: BlowupFit, count: int = 3) -> list[float]:
    """Pick times for k chosen so that 1/k spans the last decades before T_fit."""

    gap = fit.T_fit - sol.t_stop
    picked = []
    for j in range(count, 0, -1):
        k = int(math.ceil(1.0 / (gap * 10.0**j)))
        picked.append(hamilton_pick_time(sol, fit.p, fit.T_fit, max(k, 1)))
    return sorted(set(picked))


def min_series(sol: Solution) -> list[tuple[float, float]]:
    return [(t, float(u.min())) for t, u in sol.snapshots]


def check_min_growth(sol: Solution) -> float:
    """Relative margin of u_min(t) >= [u_min(0)^{1-p} - a(p-1)t]^{-1/(p-1)}.

    A sample past the time where the bracket vanishes scores -1.
    """

    p = sol.p
    if p <= 1:
        raise DomainError("the minimum growth law needs p > 1")
    data = np.asarray(min_series(sol))
    t, m = data[:, 0], data[:, 1]
    bracket = m[0] ** (1.0 - p) - sol.a * (p - 1.0) * t
    inverse_lower = np.maximum(bracket, 0.0) ** (1.0 / (p - 1.0))
    return float(np.min(m * inverse_lower) - 1.0)
