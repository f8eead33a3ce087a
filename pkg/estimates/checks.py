"""Signed margins for the Li–Yau, Harnack, monotonicity, convexity and decay inequalities.

Time derivatives are never differenced in t: u_t and u_tt are obtained from
the equation itself (u_t = Δu + uᵖ, u_tt = Δu_t + p·u^{p-1}·u_t), so the
margins measure spatial truncation only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from estimates.admissibility import (
    ParamPair,
    Problem,
    epsilon,
    in_convexity_region,
    special_case_p_le_1,
)
from estimates.errors import DomainError, TimeSpanError
from estimates.geometry import geodesic_distance, grad_sq, laplacian, path_positions
from estimates.solver import Solution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathSpec:
    x1: int
    x2: int
    t1: float
    t2: float
    segments: int = 16

    def __post_init__(self) -> None:
        if not 0 < self.t1 < self.t2:
            raise TimeSpanError(f"need 0 < t1 < t2, got t1={self.t1}, t2={self.t2}")
        if self.segments < 8:
            raise DomainError(f"segments must be >= 8, got {self.segments}")

    def to_dict(self) -> dict:
        return {"x1": self.x1, "x2": self.x2, "t1": self.t1, "t2": self.t2, "segments": self.segments}


@dataclass
class LiYauReport:
    pair: ParamPair
    epsilon: Optional[float]
    bound: float
    per_snapshot: list[tuple[float, float]]
    worst_margin: float
    checked_region: np.ndarray
    tol_disc: list[float] = field(default_factory=list)
    identity_error: float = 0.0

    @property
    def violations(self) -> list[float]:
        return [t for (t, m), tol in zip(self.per_snapshot, self.tol_disc) if m < -tol]

    @property
    def within_tolerance(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "pair": self.pair.to_dict(),
            "epsilon": self.epsilon,
            "bound": self.bound,
            "worst_margin": self.worst_margin,
            "max_tol_disc": max(self.tol_disc) if self.tol_disc else 0.0,
            "identity_error": self.identity_error,
            "violations": self.violations,
            "snapshots_checked": len(self.per_snapshot),
            "checked_nodes": int(self.checked_region.sum()),
        }


@dataclass(frozen=True)
class HarnackReport:
    path: PathSpec
    lhs: float
    rhs_full: float
    rhs_simple: float
    rho: float
    holds_full: bool
    holds_simple: bool

    def to_dict(self) -> dict:
        return {
            "path": self.path.to_dict(),
            "lhs": self.lhs,
            "rhs_full": self.rhs_full,
            "rhs_simple": self.rhs_simple,
            "rho": self.rho,
            "holds_full": self.holds_full,
            "holds_simple": self.holds_simple,
        }


@dataclass
class MonotoneConvexReport:
    T0: float
    mono_margin: float
    convex_margin: Optional[float]
    per_snapshot: list[tuple[float, float, Optional[float]]] = field(default_factory=list)
    mono_tol: float = 0.0
    convex_tol: float = 0.0

    @property
    def within_tolerance(self) -> bool:
        ok = self.mono_margin >= -self.mono_tol
        if self.convex_margin is not None:
            ok = ok and self.convex_margin >= -self.convex_tol
        return ok

    def to_dict(self) -> dict:
        return {
            "T0": self.T0,
            "mono_margin": self.mono_margin,
            "convex_margin": self.convex_margin,
            "mono_tol": self.mono_tol,
            "convex_tol": self.convex_tol,
            "snapshots_checked": len(self.per_snapshot),
        }


def _bound_constant(sol: Solution, pair: ParamPair) -> tuple[float, Optional[float]]:
    """Return (1/epsilon, epsilon); the p <= 1 case uses the pair (1, 1) and 2/n."""

    n, p = sol.geometry.n, sol.p
    if p <= 1:
        expected, coefficient = special_case_p_le_1(Problem(n, p))
        if pair.as_floats() != expected.as_floats():
            raise DomainError("for p <= 1 only the pair (1, 1) is covered")
        return coefficient, None
    eps = epsilon(Problem(n, p), pair)
    return 1.0 / eps, eps


def _unit_scale(sol: Solution) -> float:
    """Factor c with v = c·u solving the equation with reaction coefficient 1."""

    if sol.a == 1.0:
        return 1.0
    if sol.p == 1.0:
        raise DomainError("a reaction coefficient != 1 cannot be scaled away when p = 1")
    return sol.a ** (1.0 / (sol.p - 1.0))


def _select(sol: Solution, t_range: Optional[Sequence[float]], t_floor: float = 0.0):
    lo, hi = (t_floor, sol.t_stop) if t_range is None else (float(t_range[0]), float(t_range[1]))
    lo = max(lo, t_floor)
    picked = [(t, u) for t, u in sol.snapshots if lo < t <= hi]
    if not picked:
        raise TimeSpanError(f"no snapshots in ({lo}, {hi}]")
    return picked


def liyau_check(
    sol: Solution,
    pair: ParamPair,
    t_range: Optional[Sequence[float]] = None,
    *,
    disc_factor: float = 10.0,
) -> LiYauReport:
    """Evaluate F + 1/epsilon on every snapshot in ``t_range``.

    F = t(Δf + (1-α)|∇f|² + (1-β)u^{p-1}) with f = log u. The same F written
    with f_t = Δf + |∇f|² + u^{p-1} is evaluated alongside; the largest
    disagreement is reported as ``identity_error``.
    """

    inv_eps, eps = _bound_constant(sol, pair)
    alpha, beta = pair.as_floats()
    geom = sol.geometry
    p = sol.p
    scale = _unit_scale(sol)
    mask = geom.checked_mask()
    h2 = geom.spacing**2

    rows: list[tuple[float, float]] = []
    tols: list[float] = []
    identity_error = 0.0
    for t, snap in _select(sol, t_range):
        u = scale * snap
        f = np.log(u)
        lap_f = laplacian(geom, f)
        g2 = grad_sq(geom, f)
        power = u ** (p - 1.0)
        F = t * (lap_f + (1.0 - alpha) * g2 + (1.0 - beta) * power)
        f_t = lap_f + g2 + power
        F_time = t * (f_t - alpha * g2 - beta * power)
        identity_error = max(
            identity_error,
            float(np.max(np.abs(F - F_time)) / (1.0 + np.max(np.abs(F)))),
        )
        margin = F + inv_eps
        worst = float(np.min(margin[mask]))
        tol = disc_factor * h2 * float(np.max(np.abs(lap_f[mask])))
        if worst < -tol:
            logger.warning("Li-Yau margin %.3e below -%.3e at t=%.6g", worst, tol, t)
        rows.append((t, worst))
        tols.append(tol)

    return LiYauReport(
        pair=pair,
        epsilon=eps,
        bound=inv_eps,
        per_snapshot=rows,
        worst_margin=min(m for _, m in rows),
        checked_region=mask,
        tol_disc=tols,
        identity_error=identity_error,
    )


def harnack_check(
    sol: Solution,
    pair: ParamPair,
    path: PathSpec,
    *,
    tol_harnack: float = 0.05,
) -> HarnackReport:
    """Compare u(x1, t1) with u(x2, t2)(t2/t1)^{1/ε} exp(ρ) along the discrete geodesic.

    The path runs from x2 at s = 0 (time t2) to x1 at s = 1 (time t1).
    """

    inv_eps, _ = _bound_constant(sol, pair)
    alpha, beta = pair.as_floats()
    geom = sol.geometry
    p = sol.p
    n_nodes = geom.num_points
    if not (0 <= path.x1 < n_nodes and 0 <= path.x2 < n_nodes):
        raise DomainError(f"path nodes out of range for {n_nodes} nodes")
    times = sol.times
    if path.t1 < times[0] or path.t2 > times[-1]:
        raise TimeSpanError(f"path times [{path.t1}, {path.t2}] leave the stored span")

    scale = _unit_scale(sol)
    dt = path.t2 - path.t1
    distance = geodesic_distance(geom, path.x2, path.x1)
    kinetic = distance**2 / (4.0 * alpha * dt)

    s = np.linspace(0.0, 1.0, path.segments + 1)
    positions = path_positions(geom, path.x2, path.x1, path.segments)
    sample_times = (1.0 - s) * path.t2 + s * path.t1
    values = np.array(
        [float(sol.value_at(tk, [xk])[0]) for tk, xk in zip(sample_times, positions)]
    )
    potential = beta * dt * float(trapezoid((scale * values) ** (p - 1.0), s))
    rho = kinetic - potential

    lhs = scale * float(sol.field_at(path.t1)[path.x1])
    base = scale * float(sol.field_at(path.t2)[path.x2]) * (path.t2 / path.t1) ** inv_eps
    rhs_simple = base * float(np.exp(kinetic))
    rhs_full = base * float(np.exp(rho))
    holds_full = lhs <= rhs_full * (1.0 + tol_harnack)
    holds_simple = lhs <= rhs_simple * (1.0 + tol_harnack)
    if not holds_simple:
        logger.warning("Harnack bound fails on %s: lhs=%.6g rhs=%.6g", path, lhs, rhs_simple)
    return HarnackReport(
        path=path,
        lhs=lhs,
        rhs_full=rhs_full,
        rhs_simple=rhs_simple,
        rho=rho,
        holds_full=holds_full,
        holds_simple=holds_simple,
    )


def sample_paths(
    sol: Solution,
    count: int,
    seed: int,
    *,
    segments: int = 16,
    t_range: Optional[Sequence[float]] = None,
) -> list[PathSpec]:
    """Seeded random (x1, x2, t1, t2) draws inside the stored span and checked region."""

    rng = np.random.default_rng(seed)
    times = sol.times
    positive = times[times > 0]
    if positive.size == 0:
        raise TimeSpanError("solution has no positive snapshot times")
    lo, hi = float(positive[0]), float(times[-1])
    if t_range is not None:
        lo, hi = max(lo, float(t_range[0])), min(hi, float(t_range[1]))
    if not lo < hi:
        raise TimeSpanError(f"empty time window ({lo}, {hi})")
    nodes = np.flatnonzero(sol.geometry.checked_mask())
    paths = []
    while len(paths) < count:
        t1, t2 = np.sort(rng.uniform(lo, hi, size=2))
        if not 0 < t1 < t2:
            continue
        x1, x2 = rng.choice(nodes, size=2)
        paths.append(PathSpec(int(x1), int(x2), float(t1), float(t2), segments))
    return paths


def monotone_convex_check(
    sol: Solution,
    pair: ParamPair,
    T0: float = 0.0,
    *,
    convexity: Optional[bool] = None,
    disc_factor: float = 10.0,
) -> MonotoneConvexReport:
    """Monotonicity margin everywhere, convexity margin where u_t > 0.

    ``convexity=None`` evaluates the convexity margin only when the geometry
    has n >= 5 and ``pair`` lies in the convexity region; ``True`` makes that
    a requirement; ``False`` skips it.
    """

    inv_eps, _ = _bound_constant(sol, pair)
    alpha, beta = pair.as_floats()
    geom = sol.geometry
    p = sol.p
    prob = Problem(geom.n, p)

    convex_valid = p > 1 and in_convexity_region(prob, pair)
    if convexity is True and not convex_valid:
        raise DomainError(
            f"convexity needs n >= 5 and a pair in the convexity region (n={geom.n}, pair={pair.as_floats()})"
        )
    do_convex = convex_valid if convexity is None else bool(convexity)

    scale = _unit_scale(sol)
    mask = geom.checked_mask()
    h2 = geom.spacing**2
    rows: list[tuple[float, float, Optional[float]]] = []
    mono_tol = 0.0
    convex_tol = 0.0
    for t, snap in _select(sol, None, t_floor=T0):
        u = scale * snap
        u_t = laplacian(geom, u) + u**p
        mono = u_t - alpha * grad_sq(geom, u) / u - beta * u**p + inv_eps * u / (t - T0)
        mono_worst = float(np.min(mono[mask]))
        mono_tol = max(mono_tol, disc_factor * h2 * float(np.max(np.abs(u_t[mask]))))

        convex_worst: Optional[float] = None
        if do_convex:
            hv = p * u ** (p - 1.0)
            u_tt = laplacian(geom, u_t) + hv * u_t
            region = mask & (u_t > 0)
            if region.any():
                ratio = u_tt / np.where(u_t > 0, u_t, 1.0)
                grad_ratio = grad_sq(geom, u_t) / np.where(u_t > 0, u_t, 1.0) ** 2
                convex = ratio - alpha * grad_ratio - beta * hv + geom.n / (2.0 * alpha * (t - T0))
                convex_worst = float(np.min(convex[region]))
                convex_tol = max(convex_tol, disc_factor * h2 * float(np.max(np.abs(ratio[region]))))
        rows.append((t, mono_worst, convex_worst))

    convex_values = [c for _, _, c in rows if c is not None]
    report = MonotoneConvexReport(
        T0=T0,
        mono_margin=min(m for _, m, _ in rows),
        convex_margin=min(convex_values) if convex_values else None,
        per_snapshot=rows,
        mono_tol=mono_tol,
        convex_tol=convex_tol,
    )
    if not report.within_tolerance:
        logger.warning("monotonicity/convexity margins below tolerance: %s", report.to_dict())
    return report


def decay_margins(
    sol: Solution,
    pair: ParamPair,
    T_bar: float,
    *,
    t_max: Optional[float] = None,
) -> list[tuple[float, float]]:
    """Per-snapshot min of C/(T̄ - t)^{1/(p-1)} - u, C = (β(p-1))^{-1/(p-1)}."""

    p = sol.p
    _, beta = pair.as_floats()
    if p <= 1:
        raise DomainError("the decay bound needs p > 1")
    if beta <= 0:
        raise DomainError("the decay bound needs beta > 0")
    if T_bar <= sol.times[-1]:
        raise TimeSpanError(f"T_bar = {T_bar} must exceed the last snapshot time {sol.times[-1]}")
    scale = _unit_scale(sol)
    C = (beta * (p - 1.0)) ** (-1.0 / (p - 1.0))
    rows = []
    for t, snap in sol.snapshots:
        if t_max is not None and t > t_max:
            break
        bound = C / (T_bar - t) ** (1.0 / (p - 1.0))
        rows.append((t, float(np.min(bound - scale * snap))))
    if not rows:
        raise TimeSpanError("no snapshots before t_max")
    return rows


def decay_bound_check(
    sol: Solution,
    pair: ParamPair,
    T_bar: float,
    *,
    t_max: Optional[float] = None,
) -> float:
    return min(m for _, m in decay_margins(sol, pair, T_bar, t_max=t_max))
