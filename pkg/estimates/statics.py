"""Static radial profiles and the residual Δu + uᵖ."""

from __future__ import annotations

from dataclasses import dataclass
from tokenize import TokenError
from typing import Callable, Optional

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from estimates.errors import DomainError
from estimates.geometry import Geometry, GeometryKind

Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]

TALENTI_EXPRESSION = "24/(1 + r**2)**2"

_R = sp.Symbol("r", nonnegative=True)


@dataclass(frozen=True)
class RadialProfile:
    """A radial function with an evaluator r ↦ (u, u', u'')."""

    name: str
    n: int
    p: float
    evaluator: Evaluator
    analytic: bool = True
    expression: Optional[str] = None

    def __call__(self, radii) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.evaluator(np.asarray(radii, dtype=float))


def _broadcast(fn: Callable, r: np.ndarray) -> np.ndarray:
    # lambdify returns a scalar for constant derivatives
    return np.asarray(fn(r), dtype=float) * np.ones_like(r)


def _analytic_evaluator(expr: sp.Expr) -> Evaluator:
    d1 = sp.diff(expr, _R)
    d2 = sp.diff(d1, _R)
    fns = [sp.lambdify(_R, e, modules="numpy") for e in (expr, d1, d2)]

    def evaluate(r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(_broadcast(fn, r) for fn in fns)

    return evaluate


def profile_from_expression(text: str, n: int, p: float, name: Optional[str] = None) -> RadialProfile:
    """Parse a profile u(r) written in ``r`` and differentiate it symbolically.

    Args:
        text: Expression such as ``"24/(1+r^2)^2"``.
        n: Ambient dimension.
        p: Exponent of the reaction term.
        name: Label used in reports (defaults to the expression).

    Returns:
        RadialProfile with analytic first and second derivatives.
    """

    try:
        expr = parse_expr(
            text,
            local_dict={"r": _R},
            transformations=standard_transformations + (convert_xor,),
        )
    except (SyntaxError, TypeError, TokenError, sp.SympifyError) as exc:
        raise DomainError(f"cannot parse profile {text!r}: {exc}") from exc
    extra = expr.free_symbols - {_R}
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise DomainError(f"profile may only depend on r, found {names}")
    return RadialProfile(
        name=name or text,
        n=int(n),
        p=float(p),
        evaluator=_analytic_evaluator(expr),
        analytic=True,
        expression=str(expr),
    )


def talenti_profile() -> RadialProfile:
    """The static solution 24/(1+r²)² of Δu + u² = 0 on ℝ⁶."""

    return profile_from_expression(TALENTI_EXPRESSION, n=6, p=2.0, name="talenti")


def talenti_value(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 24.0 / (1.0 + r * r) ** 2


def finite_difference_profile(
    func: Callable[[np.ndarray], np.ndarray],
    n: int,
    p: float,
    *,
    h: float = 1e-3,
    name: str = "finite-difference",
) -> RadialProfile:
    """Derivatives by second-order central differences, evenly reflected at r = 0."""

    if not h > 0:
        raise DomainError("finite-difference step must be positive")

    def evaluate(r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = np.asarray(func(r), dtype=float)
        up = np.asarray(func(r + h), dtype=float)
        um = np.asarray(func(np.abs(r - h)), dtype=float)
        return u, (up - um) / (2.0 * h), (up - 2.0 * u + um) / (h * h)

    return RadialProfile(name=name, n=int(n), p=float(p), evaluator=evaluate, analytic=False)


def static_residual(profile: RadialProfile, radii) -> np.ndarray:
    """u'' + (n-1)u'/r + uᵖ at each radius; r = 0 uses n·u''(0)."""

    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    u, u1, u2 = profile(r)
    if np.any(u <= 0):
        bad = r[u <= 0]
        raise DomainError(f"profile {profile.name} is not positive at r = {bad[0]:g}")
    at_origin = r == 0
    safe_r = np.where(at_origin, 1.0, r)
    lap = np.where(at_origin, profile.n * u2, u2 + (profile.n - 1) * u1 / safe_r)
    return lap + u**profile.p


def seed_from_profile(profile: RadialProfile, geom: Geometry) -> np.ndarray:
    if geom.kind is not GeometryKind.RADIAL_EUCLIDEAN:
        raise DomainError(f"profiles seed RadialEuclidean grids only, got {geom.kind.value}")
    if geom.n != profile.n:
        raise DomainError(f"profile dimension {profile.n} does not match geometry n = {geom.n}")
    u, _, _ = profile(geom.coordinates)
    if np.any(u <= 0):
        raise DomainError(f"profile {profile.name} is not positive on the grid")
    return u


def parse_radii(text: str) -> np.ndarray:
    """``"a:b:step"`` (stop included) or a comma list ``"0,0.5,1"``."""

    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise DomainError(f"bad radius range {text!r}")
            count = int(round((stop - start) / step)) + 1
            values = start + step * np.arange(count)
            return values[values <= stop + 1e-9 * max(1.0, abs(stop))]
        return np.array([float(part) for part in text.split(",") if part.strip()])
    except ValueError as exc:
        raise DomainError(f"cannot parse radii {text!r}") from exc
