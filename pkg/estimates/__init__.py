"""Numerical core: admissible pairs, model geometries, the solver and the estimate checks."""

from estimates.admissibility import ParamPair, Problem, SweepGrid, check_admissible, epsilon, p_bar_closed
from estimates.geometry import Geometry, GeometryKind
from estimates.solver import Solution, SolverConfig, evolve

__version__ = "0.3.0"

__all__ = [
    "Geometry",
    "GeometryKind",
    "ParamPair",
    "Problem",
    "Solution",
    "SolverConfig",
    "SweepGrid",
    "check_admissible",
    "epsilon",
    "evolve",
    "p_bar_closed",
    "__version__",
]
