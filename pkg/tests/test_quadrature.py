import math
from contextlib import nullcontext

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mzi_pigeonhole import (
    HALF_PI,
    CompanionStructure,
    DeflectionGeometry,
    GaussianMode,
    GridSpec,
    InteractionConfig,
    InvalidInputError,
    PhaseModel,
    QuadratureRule,
    QuadratureSpec,
    UnsupportedCaseError,
    build_terms,
    expand_postselected,
    modes_for_structure,
    numeric_expectation,
    numeric_marginal_two_particle,
    numeric_overlap,
    overlap,
    probability_density,
)

TRIANGLE = DeflectionGeometry(3)


@pytest.mark.parametrize(
    ("d", "k", "phase_model"),
    [
        pytest.param(0.25, 0.0, PhaseModel.NONE, id="phase-free"),
        pytest.param(1.0, 0.0, PhaseModel.GEOMETRIC, id="geometric"),
        pytest.param(0.25, 5.0, PhaseModel.FULL, id="full phases"),
        pytest.param(3.0, 5.0, PhaseModel.FULL, id="strong interaction"),
    ],
)
def test_closed_form_overlap_matches_quadrature(d, k, phase_model):
    config = InteractionConfig(d=d, k=k, phase_model=phase_model)
    together = modes_for_structure(CompanionStructure.parse("{123}"), config, TRIANGLE)
    pair = modes_for_structure(CompanionStructure.parse("{12|3}"), config, TRIANGLE)
    for a, b in zip(together, pair, strict=True):
        exact = overlap(a, b)
        assert abs(numeric_overlap(a, b) - exact) <= max(1e-8 * abs(exact), 1e-14)


def test_simpson_converges_faster_than_it_needs_to():
    a = GaussianMode(center=(0.0, 1.0), phase_gradient=(0.0, 2.0))
    b = GaussianMode(center=(0.0, 0.0))
    exact = overlap(a, b)
    coarse = QuadratureSpec(QuadratureRule.SIMPSON, (-10, 10), (-10, 10), 33)
    fine = QuadratureSpec(QuadratureRule.SIMPSON, (-10, 10), (-10, 10), 65)
    coarse_error = abs(numeric_overlap(a, b, coarse) - exact)
    fine_error = abs(numeric_overlap(a, b, fine) - exact)
    assert fine_error < coarse_error / 100


def test_trapezoid_rule_agrees_on_smooth_modes():
    a = GaussianMode(center=(0.5, -0.5), phase_gradient=(1.0, 0.0), phase_offset=0.3)
    b = GaussianMode(center=(-0.5, 0.0))
    spec = QuadratureSpec.covering([a.center, b.center], rule=QuadratureRule.TRAPEZOID)
    assert numeric_overlap(a, b, spec) == pytest.approx(overlap(a, b), rel=1e-8)


@pytest.mark.parametrize(
    ("kwargs", "expected_context"),
    [
        pytest.param({}, nullcontext(), id="defaults"),
        pytest.param({"points": 64}, pytest.raises(InvalidInputError), id="even Simpson grid"),
        pytest.param({"rule": "trapezoid", "points": 64}, nullcontext(), id="even trapezoid grid"),
        pytest.param({"points": 17}, pytest.raises(InvalidInputError), id="too coarse"),
        pytest.param({"y_range": (2, 2)}, pytest.raises(InvalidInputError), id="empty range"),
    ],
)
def test_quadrature_spec_validation(kwargs, expected_context):
    with expected_context:
        QuadratureSpec(**kwargs)


def test_covering_box_is_odd_and_wide_enough():
    spec = QuadratureSpec.covering([[0.0, 9.0]])
    assert spec.points % 2 == 1
    assert spec.x_range == (-16, 16)
    spec.check_extent([[0.0, 9.0]])


def test_box_that_misses_a_center_is_rejected():
    with pytest.raises(InvalidInputError):
        numeric_overlap(GaussianMode(center=(0, 8)), GaussianMode(center=(0, 0)), QuadratureSpec())


@pytest.mark.slow
@pytest.mark.parametrize("d", [0.25, 1.0, 3.0])
def test_same_detector_pair_is_undeflected(d):
    grid = numeric_marginal_two_particle("AA", HALF_PI, InteractionConfig(d=d))
    assert math.hypot(*numeric_expectation(grid)) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("d", [0.25, 1.0, 3.0])
def test_separate_detectors_deflect_together(d):
    grid = numeric_marginal_two_particle("AB", HALF_PI, InteractionConfig(d=d))
    assert_allclose(numeric_expectation(grid), (0.0, d), atol=1e-6)


def test_marginal_needs_two_particles():
    with pytest.raises(UnsupportedCaseError):
        numeric_marginal_two_particle("AAA", HALF_PI, InteractionConfig(d=0.5))


def test_marginal_is_normalised():
    grid = numeric_marginal_two_particle("AB", HALF_PI, InteractionConfig(d=0.5))
    assert grid.integral() == pytest.approx(1.0)
    assert grid.values.min() >= 0


def test_numeric_expectation_agrees_with_cell_moments():
    state = expand_postselected(3, "AAA", HALF_PI)
    terms = build_terms(state, InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL))
    grid = probability_density(terms, GridSpec.covering(terms.centers))
    assert_allclose(numeric_expectation(grid), grid.moments(), atol=1e-6)
    assert_allclose(
        numeric_expectation(grid, QuadratureRule.TRAPEZOID), grid.moments(), atol=1e-9
    )


def test_rules_integrate_polynomials():
    x = np.linspace(0.0, 1.0, 33)
    assert QuadratureRule.SIMPSON.integrate(x**2, x) == pytest.approx(1 / 3)
    assert QuadratureRule.TRAPEZOID.integrate(x, x) == pytest.approx(1 / 2)
