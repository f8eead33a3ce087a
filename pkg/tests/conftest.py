"""Shared simulation runs; each is integrated once per test session."""

from pathlib import Path
import sys

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from estimates.geometry import Geometry
from estimates.solver import SolverConfig, evolve


def sinusoidal(geom: Geometry, value: float = 1.0, amplitude: float = 0.5) -> np.ndarray:
    x = geom.coordinates
    return value + amplitude * np.sin(2.0 * np.pi * x / geom.extent)


@pytest.fixture(scope="session")
def trivial_run():
    """u0 = 1, p = 2 on the torus: the ODE solution 1/(1-t) up to the cutoff."""

    geom = Geometry.torus(2.0 * np.pi, 64)
    cfg = SolverConfig(p=2.0, dt_max=1e-4, snapshot_interval=0.05, snapshot_growth=1.25)
    return evolve(geom, np.ones(64), cfg)


@pytest.fixture(scope="session")
def torus_p15_run():
    """Perturbed data on a torus of length 10, p = 1.5, run to blow-up."""

    geom = Geometry.torus(10.0, 512)
    cfg = SolverConfig(p=1.5, dt_max=1e-4, snapshot_interval=0.02, snapshot_growth=1.5)
    return evolve(geom, sinusoidal(geom), cfg)


@pytest.fixture(scope="session")
def sphere_run():
    geom = Geometry.sphere(5, 129)
    cfg = SolverConfig(p=1.3, dt_max=1e-3, snapshot_interval=0.05, t_end=0.5)
    u0 = 1.0 + 0.01 * np.cos(geom.coordinates)
    return evolve(geom, u0, cfg)
