"""Admissible pairs, epsilon, the threshold exponent and the convexity region."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from estimates.admissibility import (
    ParamPair,
    Problem,
    SweepGrid,
    check_admissible,
    classical_pair,
    convexity_coefficient,
    convexity_region_nonempty,
    epsilon,
    find_admissible,
    in_convexity_region,
    nonzero_beta_pair,
    p_bar_closed,
    p_bar_sweep,
    raw_convexity_coefficient,
    scan_region,
    special_case_p_le_1,
    threshold_report,
    to_number,
)
from estimates.errors import AdmissibilityError, DomainError, ResolutionError


def test_to_number_keeps_rationals_exact() -> None:
    assert to_number("2/3") == sp.Rational(2, 3)
    assert to_number(" 0.5 ") == sp.Rational(1, 2)
    assert to_number(1.25) == 1.25
    with pytest.raises(DomainError):
        to_number("alpha")
    with pytest.raises(DomainError):
        to_number(True)


def test_classical_pair_sits_on_cond2_boundary() -> None:
    result = check_admissible(Problem(2, 3), ParamPair(1, sp.Rational(1, 3)))

    assert result.admissible
    assert result.cond2_value == 0
    assert result.cond1_slack == pytest.approx(2 / 3)
    assert result.epsilon > 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_classical_pair_fails_at_eight_over_n(n) -> None:
    prob = Problem(n, sp.Rational(8, n))
    result = check_admissible(prob, classical_pair(prob))

    assert not result.admissible
    assert result.cond2_value == 0
    assert result.cond1_slack == 0
    assert result.epsilon is None


@pytest.mark.parametrize(
    "n, p, alpha, beta, expected",
    [
        (1, 2, 1, "1/2", 1.5),
        (1, "3/2", 1, "2/3", 1.21875),
        (3, 2, 1, "1/2", 0.5),
    ],
)
def test_epsilon_examples(n, p, alpha, beta, expected) -> None:
    assert epsilon(Problem(n, p), ParamPair(alpha, beta)) == pytest.approx(expected, rel=1e-12)


def test_epsilon_of_inadmissible_pair_raises() -> None:
    with pytest.raises(AdmissibilityError):
        epsilon(Problem(2, 4), ParamPair(1, "1/4"))


@pytest.mark.parametrize("p, alpha, beta", [(1, 1, 0.5), (0.5, 1, 0.5), (2, 0, 0.5), (2, 1, 1)])
def test_check_admissible_rejects_degenerate_input(p, alpha, beta) -> None:
    with pytest.raises(DomainError):
        check_admissible(Problem(2, p), ParamPair(alpha, beta))


def test_param_pair_range() -> None:
    with pytest.raises(DomainError):
        ParamPair(1.5, 0.5)
    with pytest.raises(DomainError):
        ParamPair(0.5, -0.1)


@given(n=st.integers(min_value=1, max_value=3), step=st.integers(min_value=1, max_value=999))
def test_classical_pair_admissible_below_threshold(n, step) -> None:
    p = 1 + sp.Rational(step, 1000) * (sp.Rational(8, n) - 1)
    prob = Problem(n, p)
    result = check_admissible(prob, classical_pair(prob))

    assert result.admissible
    assert result.cond2_value == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_classical_pair_admissible_for_float_exponents(n) -> None:
    for p in np.linspace(1.0, 8.0 / n, 52)[1:-1]:
        prob = Problem(n, float(p))
        pair = classical_pair(prob)
        result = check_admissible(prob, pair)

        assert result.admissible, float(p)
        assert result.cond2_value == 0
        assert pair.as_floats()[1] == pytest.approx(1.0 / float(p), rel=1e-15)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(min_value=1, max_value=10), fraction=st.floats(min_value=0.05, max_value=0.95))
def test_feasible_exponents_form_a_down_set(n, fraction) -> None:
    grid = SweepGrid(points=200)
    p = 1.0 + fraction * (p_bar_closed(n) - 1.0)

    assert find_admissible(n, p, grid) is not None
    for lower in np.linspace(1.001, p, 6):
        assert find_admissible(n, float(lower), grid) is not None


def test_down_set_holds_for_the_exponent_not_the_pair() -> None:
    # (1, 1/p) sits on cond2 = 0, so any smaller exponent needs another pair
    prob = Problem(2, 3)
    pair = classical_pair(prob)
    lower = Problem(2, sp.Rational(5, 2))

    assert check_admissible(prob, pair).admissible
    assert check_admissible(lower, pair).cond2_value < 0
    assert find_admissible(2, 2.5, SweepGrid(points=200)) is not None


@given(
    n=st.integers(min_value=1, max_value=12),
    p=st.floats(min_value=1.001, max_value=9.0),
    alpha=st.floats(min_value=0.01, max_value=1.0),
    beta=st.floats(min_value=0.0, max_value=0.99),
)
def test_epsilon_positive_whenever_admissible(n, p, alpha, beta) -> None:
    result = check_admissible(Problem(n, p), ParamPair(alpha, beta))
    if result.admissible:
        assert result.epsilon > 0
    else:
        assert result.epsilon is None


@pytest.mark.parametrize(
    "n, expected",
    [(1, 8.0), (2, 4.0), (3, 8 / 3), (4, 1 + 3 * math.sqrt(2) / 4)],
)
def test_p_bar_closed_examples(n, expected) -> None:
    assert p_bar_closed(n) == pytest.approx(expected, rel=1e-12)


def test_p_bar_closed_ordering_against_reference_exponents() -> None:
    for n in range(4, 13):
        assert n / (n - 2) < p_bar_closed(n) < n * (n + 2) / (n - 1) ** 2
    for n in (2, 3):
        assert p_bar_closed(n) < n * (n + 2) / (n - 1) ** 2


@pytest.mark.parametrize("n", range(1, 11))
def test_p_bar_sweep_matches_closed_form(n) -> None:
    grid = SweepGrid(points=400)
    grid_step = (1.0 - grid.delta) / (grid.points - 1)
    tol = 2.0 * (grid_step + grid.bisection_tol)

    assert p_bar_sweep(n, grid) == pytest.approx(p_bar_closed(n), abs=tol)


def test_p_bar_sweep_rejects_coarse_grid() -> None:
    with pytest.raises(ResolutionError):
        p_bar_sweep(4, SweepGrid(points=50))


def test_threshold_report_n4() -> None:
    report = threshold_report(4)

    assert report.ref_lower == 2
    assert report.ref_upper == pytest.approx(8 / 3)
    assert report.p_bar_closed == pytest.approx(2.0606601, abs=1e-6)
    assert report.ordering_ok
    assert report.sobolev_ps == 3


def test_threshold_report_small_dimensions() -> None:
    report = threshold_report(2)
    assert report.ref_lower is None
    assert report.ref_upper == 8
    assert report.ordering_ok
    with pytest.raises(DomainError):
        threshold_report(1)


@pytest.mark.parametrize("n, p, coefficient", [(2, 1, 1.0), (4, 0.5, 0.5), (1, 1, 2.0)])
def test_special_case_p_le_1(n, p, coefficient) -> None:
    pair, value = special_case_p_le_1(Problem(n, p))
    assert pair.as_floats() == (1.0, 1.0)
    assert value == coefficient


def test_special_case_rejects_p_above_one() -> None:
    with pytest.raises(DomainError):
        special_case_p_le_1(Problem(2, 1.5))


def test_convexity_coefficient_example() -> None:
    prob, pair = Problem(5, 1.3), ParamPair(0.5, 0.45)
    coefficient = convexity_coefficient(prob, pair)

    assert coefficient.value == pytest.approx(0.18159, abs=1e-5)
    assert coefficient.theta > 0
    assert check_admissible(prob, pair).admissible
    assert in_convexity_region(prob, pair)


def test_counterexample_is_admissible_with_negative_coefficient() -> None:
    prob, pair = Problem(5, 1.1), ParamPair(0.5, 0.6)

    assert check_admissible(prob, pair).admissible
    assert raw_convexity_coefficient(5, 1.1, 0.5, 0.6) == pytest.approx(-0.04625, abs=1e-9)
    with pytest.raises(DomainError):
        convexity_coefficient(prob, pair)
    assert not in_convexity_region(prob, pair)


def test_convexity_coefficient_rejects_equal_parameters() -> None:
    with pytest.raises(DomainError):
        convexity_coefficient(Problem(6, 1.2), ParamPair(0.4, 0.4))


@pytest.mark.parametrize("p", [1.3, 1.1])
def test_convexity_region_nonempty_n5(p) -> None:
    prob = Problem(5, p)
    pair = convexity_region_nonempty(prob)

    assert pair is not None
    alpha, beta = pair.as_floats()
    assert alpha > beta
    assert check_admissible(prob, pair).admissible
    assert raw_convexity_coefficient(5, p, alpha, beta) >= 0


def test_convexity_region_domain() -> None:
    with pytest.raises(DomainError):
        convexity_region_nonempty(Problem(4, 1.5))
    with pytest.raises(DomainError):
        convexity_region_nonempty(Problem(5, 1.9))


@settings(max_examples=10, deadline=None)
@given(n=st.integers(min_value=5, max_value=10), fraction=st.floats(min_value=0.0, max_value=1.0))
def test_convexity_region_nonempty_across_exponents(n, fraction) -> None:
    p = 1.01 + fraction * (0.99 * p_bar_closed(n) - 1.01)
    assert convexity_region_nonempty(Problem(n, p)) is not None


def test_nonzero_beta_pair() -> None:
    prob = Problem(3, 2)
    pair = nonzero_beta_pair(prob)

    assert pair is not None
    assert pair.as_floats()[1] > 0
    assert check_admissible(prob, pair).admissible


def test_scan_region_rows_and_summary() -> None:
    scan = scan_region(Problem(2, 3), SweepGrid(points=20))
    rows = list(scan.rows())
    summary = scan.summary()

    assert len(rows) == 400
    assert summary["grid_points"] == 400
    assert summary["admissible_points"] == sum(row[2] for row in rows)
    assert summary["max_epsilon_pair"]["epsilon"] > 0
    assert all(row[5] == "" for row in rows if not row[2])
