"""Admissible (alpha, beta) pairs, the constant epsilon and the threshold exponent p̄ₙ.

The two conditions on a pair are

    cond2:  (p-1)(beta*p - alpha) + 4*alpha*(1-alpha)*(1-beta)/n >= 0
    cond1:  p < 1 + 8*alpha*(1-beta)/n

and, when both hold, epsilon = n(p-1)/(8*alpha*(1-beta)^2) * (1 + 8*alpha*(1-beta)/n - p).

The scalar helpers accept floats, numpy arrays or sympy rationals alike; when
any operand is a sympy number the whole evaluation runs in exact arithmetic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import sympy as sp

from estimates.errors import AdmissibilityError, DomainError, ResolutionError

logger = logging.getLogger(__name__)

Number = Union[int, float, sp.Rational]


def to_number(value: object) -> Number:
    """Coerce user input ("2/3", 0.5, 3) to a number, keeping rationals exact."""

    if isinstance(value, bool):
        raise DomainError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float, sp.Rational)):
        return value
    if isinstance(value, sp.Basic):
        if not value.is_number:
            raise DomainError(f"expected a number, got {value}")
        return value if value.is_Rational else float(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return sp.Rational(text)
        except (TypeError, ValueError):
            pass
        try:
            expr = sp.sympify(text)
        except (sp.SympifyError, SyntaxError) as exc:
            raise DomainError(f"cannot parse number {value!r}") from exc
        if not expr.is_number:
            raise DomainError(f"cannot parse number {value!r}")
        return expr if expr.is_Rational else float(expr)
    raise DomainError(f"expected a number, got {value!r}")


def _is_exact(*values: object) -> bool:
    return any(isinstance(v, sp.Basic) for v in values)


@dataclass(frozen=True)
class Problem:
    """Dimension ``n`` and exponent ``p`` of u_t = Δu + uᵖ."""

    n: int
    p: Number

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", to_number(self.p))
        p_float = float(self.p)
        if not math.isfinite(p_float) or p_float <= 0:
            raise DomainError(f"p must be finite and > 0, got {self.p!r}")

    @property
    def p_float(self) -> float:
        return float(self.p)

    def to_dict(self) -> dict:
        return {"n": self.n, "p": float(self.p)}


@dataclass(frozen=True)
class ParamPair:
    """Candidate pair (alpha, beta) in [0, 1]²."""

    alpha: Number
    beta: Number

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", to_number(self.alpha))
        object.__setattr__(self, "beta", to_number(self.beta))
        if not 0 <= float(self.alpha) <= 1:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0 <= float(self.beta) <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")

    def as_floats(self) -> tuple[float, float]:
        return float(self.alpha), float(self.beta)

    def to_dict(self) -> dict:
        return {"alpha": float(self.alpha), "beta": float(self.beta)}


@dataclass(frozen=True)
class AdmissibilityResult:
    admissible: bool
    cond2_value: float
    cond1_slack: float
    epsilon: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "cond2_value": self.cond2_value,
            "cond1_slack": self.cond1_slack,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class ThresholdReport:
    n: int
    p_bar_closed: float
    p_bar_sweep: float
    sobolev_ps: Optional[float]
    ref_upper: float
    ref_lower: Optional[float]
    ordering_ok: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p_bar_closed": self.p_bar_closed,
            "p_bar_sweep": self.p_bar_sweep,
            "sobolev_ps": self.sobolev_ps,
            "ref_upper": self.ref_upper,
            "ref_lower": self.ref_lower,
            "ordering_ok": self.ordering_ok,
        }


@dataclass(frozen=True)
class ConvexityCoefficient:
    value: float
    theta: float

    def to_dict(self) -> dict:
        return {"value": self.value, "theta": self.theta}


@dataclass(frozen=True)
class SweepGrid:
    """Resolution of an (alpha, beta) sweep.

    ``points`` per axis on [delta, 1] x [delta, 1 - delta] (alpha = 1 is kept
    because the supremum for n <= 3 sits on that edge). When no grid point is
    feasible, the best-scoring point is zoomed into ``refine_levels`` times
    with ``refine_points`` samples per axis, shrinking the window fivefold
    each level.
    """

    points: int = 400
    delta: float = 1e-4
    bisection_tol: float = 1e-4
    refine_levels: int = 8
    refine_points: int = 31

    def __post_init__(self) -> None:
        if self.points < 2:
            raise DomainError("a sweep grid needs at least 2 points per axis")
        if not 0 < self.delta < 0.5:
            raise DomainError("delta must lie in (0, 0.5)")
        if self.bisection_tol <= 0:
            raise DomainError("bisection_tol must be positive")
        if self.refine_points < 3:
            raise DomainError("refine_points must be at least 3")

    def axes(self, *, include_alpha_one: bool = True) -> tuple[np.ndarray, np.ndarray]:
        alpha_hi = 1.0 if include_alpha_one else 1.0 - self.delta
        alphas = np.linspace(self.delta, alpha_hi, self.points)
        betas = np.linspace(self.delta, 1.0 - self.delta, self.points)
        return alphas, betas


# Scalar/vectorised condition helpers

def cond2_value(n, p, alpha, beta):
    return (p - 1) * (beta * p - alpha) + 4 * alpha * (1 - alpha) * (1 - beta) / n


def cond1_slack(n, p, alpha, beta):
    return 1 + 8 * alpha * (1 - beta) / n - p


def epsilon_value(n, p, alpha, beta):
    return n * (p - 1) / (8 * alpha * (1 - beta) ** 2) * cond1_slack(n, p, alpha, beta)


def raw_convexity_coefficient(n, p, alpha, beta):
    """Bracket of the convexity estimate, evaluated without any domain guard."""

    return alpha + beta * (p - 2) - n * (p - 1) * (alpha - beta) ** 2 / (
        8 * alpha * (1 - alpha) * (1 - beta)
    )


def convexity_theta(n, p, alpha, beta):
    return n * p * (p - 1) * (alpha - beta) / (8 * alpha * (1 - alpha) * (1 - beta))


def _operands(prob: Problem, pair: ParamPair) -> tuple:
    n, p, alpha, beta = prob.n, prob.p, pair.alpha, pair.beta
    if _is_exact(p, alpha, beta):
        p, alpha, beta = (sp.Rational(v) for v in (p, alpha, beta))
    return n, p, alpha, beta


def check_admissible(prob: Problem, pair: ParamPair) -> AdmissibilityResult:
    """Evaluate both conditions exactly as written and derive epsilon."""

    n, p, alpha, beta = _operands(prob, pair)
    if float(p) <= 1:
        raise DomainError(f"admissibility needs p > 1 (got p = {prob.p}); see special_case_p_le_1")
    if alpha == 0:
        raise DomainError("alpha = 0: epsilon is undefined")
    if beta == 1:
        raise DomainError("beta = 1: epsilon is undefined")

    c2 = cond2_value(n, p, alpha, beta)
    slack = cond1_slack(n, p, alpha, beta)
    admissible = bool(c2 >= 0) and bool(slack > 0)
    eps: Optional[float] = None
    if admissible:
        eps = float(epsilon_value(n, p, alpha, beta))
        if not eps > 0:
            raise AdmissibilityError(f"non-positive epsilon {eps} for an admissible pair")
    return AdmissibilityResult(
        admissible=admissible,
        cond2_value=float(c2),
        cond1_slack=float(slack),
        epsilon=eps,
    )


def epsilon(prob: Problem, pair: ParamPair) -> float:
    result = check_admissible(prob, pair)
    if not result.admissible:
        raise AdmissibilityError(
            f"pair {pair.as_floats()} is not admissible for n={prob.n}, p={float(prob.p)}"
        )
    return result.epsilon


def classical_pair(prob: Problem) -> ParamPair:
    """The pair (1, 1/p) with beta exact, so cond2 evaluates to exactly 0.

    A float p is taken at its exact binary value.
    """

    p = prob.p if _is_exact(prob.p) else float(prob.p)
    return ParamPair(1, sp.Integer(1) / sp.Rational(p))


def special_case_p_le_1(prob: Problem) -> tuple[ParamPair, float]:
    """For 0 < p <= 1 the pair (1, 1) works with bound coefficient 2/n."""

    if float(prob.p) > 1:
        raise DomainError(f"special case only applies to p <= 1, got p = {prob.p}")
    return ParamPair(1, 1), 2.0 / prob.n


# Threshold exponent

def p_bar_closed(n: int) -> float:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if n <= 3:
        return 8.0 / n
    root = math.sqrt(n * (n + 4))
    return (3 * n + 4 + 3 * root) / (2 * (3 * n - 4))


def _refine(
    center: tuple[float, float],
    step: float,
    grid: SweepGrid,
    bounds: tuple[float, float, float, float],
    score: Callable[[np.ndarray, np.ndarray], np.ndarray],
    feasible: Callable[[np.ndarray, np.ndarray], np.ndarray],
) -> Optional[tuple[float, float]]:
    a_lo, a_hi, b_lo, b_hi = bounds
    ca, cb = center
    shrink = 6.0 / (grid.refine_points - 1)
    for _ in range(grid.refine_levels):
        half = 3.0 * step
        alphas = np.linspace(max(a_lo, ca - half), min(a_hi, ca + half), grid.refine_points)
        betas = np.linspace(max(b_lo, cb - half), min(b_hi, cb + half), grid.refine_points)
        A, B = np.meshgrid(alphas, betas, indexing="ij")
        values = score(A, B)
        mask = feasible(A, B)
        if mask.any():
            idx = np.argmax(np.where(mask, values, -np.inf))
            return float(A.flat[idx]), float(B.flat[idx])
        idx = np.argmax(values)
        ca, cb = float(A.flat[idx]), float(B.flat[idx])
        step *= shrink
    return None


def find_admissible(n: int, p: float, grid: SweepGrid) -> Optional[tuple[float, float]]:
    """Return some admissible (alpha, beta) for (n, p) found by grid + refinement."""

    alphas, betas = grid.axes(include_alpha_one=True)
    A, B = np.meshgrid(alphas, betas, indexing="ij")

    def score(a, b):
        return np.minimum(cond2_value(n, p, a, b), cond1_slack(n, p, a, b))

    def feasible(a, b):
        return (cond2_value(n, p, a, b) >= 0) & (cond1_slack(n, p, a, b) > 0)

    values = score(A, B)
    mask = feasible(A, B)
    if mask.any():
        idx = np.argmax(np.where(mask, values, -np.inf))
        return float(A.flat[idx]), float(B.flat[idx])
    idx = np.argmax(values)
    step = float(alphas[1] - alphas[0])
    bounds = (grid.delta, 1.0, grid.delta, 1.0 - grid.delta)
    return _refine((float(A.flat[idx]), float(B.flat[idx])), step, grid, bounds, score, feasible)


def p_bar_sweep(n: int, grid: Optional[SweepGrid] = None) -> float:
    """Supremum of p > 1 with an admissible pair, by bisection over grid feasibility."""

    grid = grid or SweepGrid()
    if grid.points < 100:
        raise ResolutionError(f"sweep needs at least 100 points per axis, got {grid.points}")
    n = int(n)
    lo = 1.0 + grid.bisection_tol
    if find_admissible(n, lo, grid) is None:
        raise ResolutionError(f"grid cannot resolve an admissible pair at p = {lo} for n = {n}")
    # cond1 caps p below 1 + 8/n for every pair
    hi = 1.0 + 8.0 / n
    while hi - lo > grid.bisection_tol:
        mid = 0.5 * (lo + hi)
        if find_admissible(n, mid, grid) is not None:
            lo = mid
        else:
            hi = mid
        logger.debug("n=%d bracket [%.8f, %.8f]", n, lo, hi)
    return lo


def threshold_report(n: int, grid: Optional[SweepGrid] = None) -> ThresholdReport:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"threshold report needs n >= 2, got {n!r}")
    n = int(n)
    closed = p_bar_closed(n)
    swept = p_bar_sweep(n, grid)
    ref_upper = n * (n + 2) / (n - 1) ** 2
    ref_lower = n / (n - 2) if n >= 3 else None
    sobolev = (n + 2) / (n - 2) if n >= 3 else None
    if n >= 4:
        ordering_ok = ref_lower < closed < ref_upper
    else:
        ordering_ok = closed < ref_upper
    if not ordering_ok:
        logger.warning("reference ordering fails for n=%d (p_bar=%.6f)", n, closed)
    return ThresholdReport(
        n=n,
        p_bar_closed=closed,
        p_bar_sweep=swept,
        sobolev_ps=sobolev,
        ref_upper=ref_upper,
        ref_lower=ref_lower,
        ordering_ok=ordering_ok,
    )


# Region maps

@dataclass(frozen=True)
class RegionScan:
    """Conditions evaluated on a full (alpha, beta) grid for one problem."""

    problem: Problem
    alpha: np.ndarray
    beta: np.ndarray
    cond2: np.ndarray
    cond1_slack: np.ndarray
    admissible: np.ndarray
    epsilon: np.ndarray
    convexity: np.ndarray

    def rows(self):
        """Yield CSV rows in (alpha, beta) grid order."""

        for idx in np.ndindex(self.alpha.shape):
            eps = self.epsilon[idx]
            yield (
                float(self.alpha[idx]),
                float(self.beta[idx]),
                int(bool(self.admissible[idx])),
                float(self.cond2[idx]),
                float(self.cond1_slack[idx]),
                "" if np.isnan(eps) else float(eps),
                float(self.convexity[idx]),
            )

    def summary(self) -> dict:
        count = int(self.admissible.sum())
        best = None
        if count:
            idx = np.unravel_index(np.argmax(np.where(self.admissible, self.epsilon, -np.inf)), self.alpha.shape)
            best = {
                "alpha": float(self.alpha[idx]),
                "beta": float(self.beta[idx]),
                "epsilon": float(self.epsilon[idx]),
            }
        return {
            "n": self.problem.n,
            "p": float(self.problem.p),
            "grid_points": int(self.alpha.size),
            "admissible_points": count,
            "max_epsilon_pair": best,
        }


def scan_region(prob: Problem, grid: Optional[SweepGrid] = None) -> RegionScan:
    grid = grid or SweepGrid(points=200)
    p = float(prob.p)
    if p <= 1:
        raise DomainError(f"region maps need p > 1, got {prob.p}")
    n = prob.n
    alphas, betas = grid.axes(include_alpha_one=False)
    A, B = np.meshgrid(alphas, betas, indexing="ij")
    c2 = cond2_value(n, p, A, B)
    slack = cond1_slack(n, p, A, B)
    admissible = (c2 >= 0) & (slack > 0)
    eps = np.where(admissible, epsilon_value(n, p, A, B), np.nan)
    coeff = raw_convexity_coefficient(n, p, A, B)
    return RegionScan(prob, A, B, c2, slack, admissible, eps, coeff)


def nonzero_beta_pair(prob: Problem, grid: Optional[SweepGrid] = None) -> Optional[ParamPair]:
    """An admissible pair with beta > 0 (largest epsilon on the grid)."""

    scan = scan_region(prob, grid)
    mask = scan.admissible & (scan.beta > 0)
    if not mask.any():
        return None
    idx = np.unravel_index(np.argmax(np.where(mask, scan.epsilon, -np.inf)), scan.alpha.shape)
    return ParamPair(float(scan.alpha[idx]), float(scan.beta[idx]))


def convexity_coefficient(prob: Problem, pair: ParamPair) -> ConvexityCoefficient:
    n, p = prob.n, float(prob.p)
    alpha, beta = pair.as_floats()
    if alpha <= 0 or alpha >= 1:
        raise DomainError(f"convexity coefficient needs 0 < alpha < 1, got {alpha}")
    if beta >= 1:
        raise DomainError("convexity coefficient needs beta < 1")
    if alpha <= beta:
        raise DomainError(f"convexity bound needs alpha > beta, got alpha={alpha}, beta={beta}")
    return ConvexityCoefficient(
        value=float(raw_convexity_coefficient(n, p, alpha, beta)),
        theta=float(convexity_theta(n, p, alpha, beta)),
    )


def in_convexity_region(prob: Problem, pair: ParamPair) -> bool:
    """Admissible, alpha > beta and nonnegative coefficient."""

    alpha, beta = pair.as_floats()
    if prob.n < 5 or not 0 < alpha < 1 or alpha <= beta:
        return False
    if not check_admissible(prob, pair).admissible:
        return False
    return convexity_coefficient(prob, pair).value >= 0


def convexity_region_nonempty(prob: Problem, grid: Optional[SweepGrid] = None) -> Optional[ParamPair]:
    """Best convexity-admissible pair on the grid, or None when the region looks empty."""

    grid = grid or SweepGrid(points=200)
    n, p = prob.n, float(prob.p)
    if n < 5:
        raise DomainError(f"the convexity result needs n >= 5, got n = {n}")
    if p <= 1 or p >= p_bar_closed(n):
        raise DomainError(f"p must lie in (1, p_bar_{n}) = (1, {p_bar_closed(n):.6f}), got {p}")

    scan = scan_region(prob, grid)
    mask = scan.admissible & (scan.alpha > scan.beta) & (scan.convexity >= 0)
    if mask.any():
        idx = np.unravel_index(np.argmax(np.where(mask, scan.convexity, -np.inf)), scan.alpha.shape)
        return ParamPair(float(scan.alpha[idx]), float(scan.beta[idx]))

    def score(a, b):
        return np.minimum.reduce(
            [
                cond2_value(n, p, a, b),
                cond1_slack(n, p, a, b),
                a - b,
                raw_convexity_coefficient(n, p, a, b),
            ]
        )

    def feasible(a, b):
        return (
            (cond2_value(n, p, a, b) >= 0)
            & (cond1_slack(n, p, a, b) > 0)
            & (a > b)
            & (raw_convexity_coefficient(n, p, a, b) >= 0)
        )

    values = score(scan.alpha, scan.beta)
    idx = np.unravel_index(np.argmax(values), values.shape)
    step = float(scan.alpha[1, 0] - scan.alpha[0, 0])
    bounds = (grid.delta, 1.0 - grid.delta, grid.delta, 1.0 - grid.delta)
    found = _refine(
        (float(scan.alpha[idx]), float(scan.beta[idx])), step, grid, bounds, score, feasible
    )
    if found is None:
        logger.warning("no convexity-admissible pair found for n=%d, p=%.6f", n, p)
        return None
    return ParamPair(*found)
