"""Discretised model geometries with nonnegative Ricci curvature.

Three one-parameter domains stand in for the manifold: the flat 1-D torus,
radially symmetric fields on ℝⁿ and radially symmetric (zonal) fields on the
unit sphere Sⁿ. Each exposes the Laplace–Beltrami stencil, the squared
gradient and the geodesic distance along the discretised coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from estimates.errors import DomainError


class GeometryKind(str, Enum):
    FLAT_TORUS_1D = "FlatTorus1D"
    RADIAL_EUCLIDEAN = "RadialEuclidean"
    RADIAL_SPHERE = "RadialSphere"


@dataclass(frozen=True)
class Geometry:
    """Immutable description of a discretised domain.

    ``extent`` is the circumference L for the torus, the outer radius for
    RadialEuclidean and is fixed to π for the sphere. Radial kinds use a
    vertex grid that includes r = 0 (both poles on the sphere).
    """

    kind: GeometryKind
    n: int
    num_points: int
    extent: float

    def __post_init__(self) -> None:
        kind = GeometryKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if int(self.num_points) != self.num_points or self.num_points < 16:
            raise DomainError(f"num_points must be an integer >= 16, got {self.num_points!r}")
        object.__setattr__(self, "num_points", int(self.num_points))
        if kind is GeometryKind.FLAT_TORUS_1D and self.n != 1:
            raise DomainError("FlatTorus1D is one-dimensional; n must be 1")
        if kind is GeometryKind.RADIAL_SPHERE:
            if self.n < 2:
                raise DomainError("RadialSphere needs n >= 2")
            if not math.isclose(float(self.extent), math.pi, rel_tol=1e-12):
                raise DomainError("RadialSphere extent is fixed to pi")
            object.__setattr__(self, "extent", math.pi)
        extent = float(self.extent)
        if not math.isfinite(extent) or extent <= 0:
            raise DomainError(f"extent must be finite and > 0, got {self.extent!r}")
        object.__setattr__(self, "extent", extent)

    @classmethod
    def torus(cls, length: float, num_points: int) -> "Geometry":
        return cls(GeometryKind.FLAT_TORUS_1D, 1, num_points, length)

    @classmethod
    def euclidean(cls, n: int, radius: float, num_points: int) -> "Geometry":
        return cls(GeometryKind.RADIAL_EUCLIDEAN, n, num_points, radius)

    @classmethod
    def sphere(cls, n: int, num_points: int) -> "Geometry":
        return cls(GeometryKind.RADIAL_SPHERE, n, num_points, math.pi)

    @property
    def periodic(self) -> bool:
        return self.kind is GeometryKind.FLAT_TORUS_1D

    @property
    def spacing(self) -> float:
        if self.periodic:
            return self.extent / self.num_points
        return self.extent / (self.num_points - 1)

    @property
    def nonneg_ricci(self) -> bool:
        # flat torus and Euclidean space are Ricci-flat, the round sphere is positive
        return True

    @property
    def coordinates(self) -> np.ndarray:
        if self.periodic:
            return np.arange(self.num_points) * self.spacing
        return np.linspace(0.0, self.extent, self.num_points)

    def checked_mask(self, guard_fraction: float = 0.1) -> np.ndarray:
        """Nodes where inequalities are evaluated.

        Only RadialEuclidean has an artificial (Neumann) outer boundary; the
        outer ``guard_fraction`` of its nodes is excluded.
        """

        mask = np.ones(self.num_points, dtype=bool)
        if self.kind is GeometryKind.RADIAL_EUCLIDEAN:
            guard = max(1, int(math.ceil(guard_fraction * self.num_points)))
            mask[-guard:] = False
        return mask

    def validate_field(self, values) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.num_points,):
            raise DomainError(f"field must have shape ({self.num_points},), got {arr.shape}")
        return arr

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "num_points": self.num_points,
            "extent": self.extent,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Geometry":
        kind = GeometryKind(payload["kind"])
        extent = payload.get("extent", math.pi if kind is GeometryKind.RADIAL_SPHERE else None)
        if extent is None:
            raise DomainError(f"{kind.value} needs an extent")
        n = payload.get("n", 1 if kind is GeometryKind.FLAT_TORUS_1D else None)
        if n is None:
            raise DomainError(f"{kind.value} needs n")
        return cls(kind, n, payload["num_points"], extent)


def _radial_weight(geom: Geometry, coords: np.ndarray) -> np.ndarray:
    """1/r on ℝⁿ or cot θ on Sⁿ, evaluated at interior nodes only."""

    inner = coords[1:-1]
    if geom.kind is GeometryKind.RADIAL_EUCLIDEAN:
        return 1.0 / inner
    return np.cos(inner) / np.sin(inner)


def laplacian(geom: Geometry, field) -> np.ndarray:
    """Second-order Laplace–Beltrami stencil.

    Origin and poles use the removable-singularity limit n·u'' with even
    extension, i.e. 2n(u₁ − u₀)/h². The Euclidean outer end is reflected
    (homogeneous Neumann).
    """

    u = geom.validate_field(field)
    h = geom.spacing
    if geom.periodic:
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (h * h)

    n = geom.n
    out = np.empty_like(u)
    d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    d1 = (u[2:] - u[:-2]) / (2.0 * h)
    out[1:-1] = d2 + (n - 1) * _radial_weight(geom, geom.coordinates) * d1
    out[0] = 2.0 * n * (u[1] - u[0]) / (h * h)
    if geom.kind is GeometryKind.RADIAL_SPHERE:
        out[-1] = 2.0 * n * (u[-2] - u[-1]) / (h * h)
    else:
        out[-1] = 2.0 * (u[-2] - u[-1]) / (h * h)
    return out


def gradient(geom: Geometry, field) -> np.ndarray:
    """First derivative along the coordinate.

    Central differences inside, periodic on the torus; zero at the origin
    and the poles (even extension); second-order one-sided at the Euclidean
    outer end.
    """

    u = geom.validate_field(field)
    h = geom.spacing
    if geom.periodic:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * h)
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    out[0] = 0.0
    if geom.kind is GeometryKind.RADIAL_SPHERE:
        out[-1] = 0.0
    else:
        # difference form vanishes exactly on constants
        out[-1] = (3.0 * (u[-1] - u[-2]) - (u[-2] - u[-3])) / (2.0 * h)
    return out


def grad_sq(geom: Geometry, field) -> np.ndarray:
    return gradient(geom, field) ** 2


def geodesic_distance(geom: Geometry, i: int, j: int) -> float:
    if not (0 <= i < geom.num_points and 0 <= j < geom.num_points):
        raise DomainError(f"node index out of range: {i}, {j}")
    coords = geom.coordinates
    d = abs(float(coords[i] - coords[j]))
    if geom.periodic:
        return min(d, geom.extent - d)
    return d


def path_positions(geom: Geometry, i: int, j: int, segments: int) -> np.ndarray:
    """Coordinates of a constant-speed geodesic from node ``i`` to node ``j``.

    On the torus the minor arc is followed; positions are reduced mod L.
    """

    coords = geom.coordinates
    start, end = float(coords[i]), float(coords[j])
    if geom.periodic:
        delta = end - start
        if delta > geom.extent / 2:
            delta -= geom.extent
        elif delta < -geom.extent / 2:
            delta += geom.extent
        s = np.linspace(0.0, 1.0, segments + 1)
        return np.mod(start + s * delta, geom.extent)
    return np.linspace(start, end, segments + 1)


def interpolate(geom: Geometry, field, positions) -> np.ndarray:
    """Piecewise-linear spatial interpolation (periodic on the torus)."""

    u = geom.validate_field(field)
    coords = geom.coordinates
    if geom.periodic:
        return np.interp(positions, coords, u, period=geom.extent)
    return np.interp(positions, coords, u)
