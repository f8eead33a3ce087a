"""Static profiles: the Talenti residual, finite differences and grid seeding."""

import numpy as np
import pytest

from estimates.errors import DomainError
from estimates.geometry import Geometry
from estimates.statics import (
    finite_difference_profile,
    parse_radii,
    profile_from_expression,
    seed_from_profile,
    static_residual,
    talenti_profile,
    talenti_value,
)


def test_talenti_residual_vanishes_at_origin() -> None:
    assert static_residual(talenti_profile(), [0.0])[0] == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_talenti_residual_at_sample_radii(r) -> None:
    u = talenti_value(r)
    assert abs(static_residual(talenti_profile(), [r])[0]) <= 1e-10 * max(u**2, 1.0)


def test_talenti_residual_on_dense_grid() -> None:
    radii = np.linspace(0.0, 50.0, 1000)
    residual = static_residual(talenti_profile(), radii)

    assert np.all(np.abs(residual) <= 1e-9 * np.maximum(talenti_value(radii) ** 2, 1.0))


def test_finite_difference_profile_tracks_talenti() -> None:
    profile = finite_difference_profile(talenti_value, 6, 2.0, h=1e-3)
    residual = static_residual(profile, parse_radii("0:10:0.1"))

    assert not profile.analytic
    assert np.max(np.abs(residual)) <= 5e-3


def test_seed_on_euclidean_grid() -> None:
    geom = Geometry.euclidean(6, 10.0, 21)
    seed = seed_from_profile(talenti_profile(), geom)

    assert seed[0] == pytest.approx(24.0)
    assert seed[2] == pytest.approx(6.0)
    assert seed[6] == pytest.approx(0.24)


def test_seed_rejects_other_geometries() -> None:
    with pytest.raises(DomainError):
        seed_from_profile(talenti_profile(), Geometry.torus(1.0, 16))
    with pytest.raises(DomainError):
        seed_from_profile(talenti_profile(), Geometry.euclidean(4, 10.0, 21))


def test_expression_errors() -> None:
    with pytest.raises(DomainError):
        profile_from_expression("24/(1 + r**2", 6, 2.0)
    with pytest.raises(DomainError):
        profile_from_expression("exp(-s*r)", 6, 2.0)


def test_constant_expression_broadcasts() -> None:
    u, u1, u2 = profile_from_expression("3", 4, 2.0)(np.array([0.0, 1.0, 2.0]))

    assert u.shape == (3,)
    assert np.all(u == 3.0)
    assert np.all(u1 == 0.0) and np.all(u2 == 0.0)


def test_residual_domain_checks() -> None:
    with pytest.raises(DomainError):
        static_residual(talenti_profile(), [-1.0])
    with pytest.raises(DomainError):
        static_residual(profile_from_expression("1 - r", 3, 2.0), [0.0, 2.0])


def test_parse_radii() -> None:
    radii = parse_radii("0:10:0.1")
    assert len(radii) == 101
    assert radii[-1] == pytest.approx(10.0)

    assert parse_radii("0, 0.5,1").tolist() == [0.0, 0.5, 1.0]
    with pytest.raises(DomainError):
        parse_radii("5:1:0.1")
    with pytest.raises(DomainError):
        parse_radii("a,b")
