import logging
import math
from contextlib import nullcontext

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mzi_pigeonhole import (
    HALF_PI,
    CompanionStructure,
    DensityGrid,
    GridSpec,
    InteractionConfig,
    InvalidInputError,
    PhaseModel,
    UnsupportedCaseError,
    build_terms,
    closed_form_reference,
    density_at,
    expand_postselected,
    incoherent_density,
    probability_density,
    total_norm,
)
from mzi_pigeonhole._density import ensemble_damping, interaction_phase_between

SQRT3 = math.sqrt(3)
ALL_AT_A = expand_postselected(3, "AAA", HALF_PI)
POINTS = np.array([[0.0, 0.0], [0.3, 0.4], [-1.2, 2.0], [2.5, -0.7], [0.0, 3.1]])


@pytest.mark.parametrize(
    ("d", "k", "phase_model"),
    [
        pytest.param(0.0, 5.0, PhaseModel.NONE, id="no interaction"),
        pytest.param(0.25, 5.0, PhaseModel.NONE, id="phase-free d=0.25"),
        pytest.param(1.0, 5.0, PhaseModel.NONE, id="phase-free d=1"),
        pytest.param(0.25, 0.0, PhaseModel.GEOMETRIC, id="geometric only"),
        pytest.param(0.1, 5.0, PhaseModel.FULL, id="full phases d=0.1"),
        pytest.param(0.25, 5.0, PhaseModel.FULL, id="full phases d=0.25"),
        pytest.param(3.0, 5.0, PhaseModel.FULL, id="full phases d=3"),
    ],
)
def test_engine_matches_closed_form(d, k, phase_model):
    terms = build_terms(ALL_AT_A, InteractionConfig(d=d, k=k, phase_model=phase_model))
    engine = density_at(terms, POINTS)
    reference = closed_form_reference(POINTS[:, 0], POINTS[:, 1], d, k, phase_model)
    # |1 - i|**2 = 2 multiplies every term of the composed marginal
    assert_allclose(engine, 2 * reference, rtol=1e-9, atol=1e-12 * float(np.max(reference)))


def test_closed_form_only_for_all_at_a():
    with pytest.raises(UnsupportedCaseError):
        closed_form_reference(0.0, 0.0, 0.5, 5.0, "none", pattern="ABB")
    with pytest.raises(UnsupportedCaseError):
        closed_form_reference(0.0, 0.0, 0.5, 5.0, "none", particle=1)


def test_scalar_closed_form_is_a_float():
    assert isinstance(closed_form_reference(0.0, 0.0, 0.5, 5.0, "full"), float)


def test_no_interaction_gives_a_centered_gaussian():
    grid = probability_density(build_terms(ALL_AT_A, InteractionConfig(d=0.0)), GridSpec(points=65))
    assert grid.integral() == pytest.approx(1.0)
    assert_allclose(grid.moments(), (0.0, 0.0), atol=1e-12)
    peak = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert (grid.xs[peak[1]], grid.ys[peak[0]]) == (0.0, 0.0)


def test_incoherent_density_averages_the_four_centers():
    d = 3.0
    terms = build_terms(ALL_AT_A, InteractionConfig(d=d))
    grid = incoherent_density(terms, GridSpec.covering(terms.centers))
    assert not grid.truncated
    assert_allclose(grid.moments(), (0.0, SQRT3 / 2 * d), atol=1e-6)


def test_prefactors_are_hermitian_and_phases_antisymmetric():
    config = InteractionConfig(d=0.4, k=5.0, phase_model=PhaseModel.FULL)
    terms = build_terms(ALL_AT_A, config, particle=1)
    for g in range(terms.n_groups):
        assert terms.prefactor(g, g) == 2
        for h in range(terms.n_groups):
            assert terms.prefactor(h, g) == terms.prefactor(g, h).conjugate()
            assert terms.interaction_phase(h, g) == -terms.interaction_phase(g, h)


def test_interaction_phase_counts_companion_pairs():
    config = InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL)
    together, pair = CompanionStructure.parse("{123}"), CompanionStructure.parse("{12|3}")
    assert interaction_phase_between(together, pair, config) == pytest.approx(4 * 5.0 * 0.25)
    assert interaction_phase_between(pair, pair, config) == 0


@pytest.mark.parametrize(
    ("theta", "k", "expected"),
    [
        pytest.param(0.0, 5.0, 1.0, id="no phase difference"),
        pytest.param(2.0, 5.0, math.exp(-0.16), id="spread sqrt(2)*theta/k"),
    ],
)
def test_ensemble_damping(theta, k, expected):
    assert ensemble_damping(theta, k) == pytest.approx(expected)


def test_ensemble_spread_damps_cross_terms():
    base = InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL)
    spread = InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL, ensemble_spread=True)
    sharp, damped = build_terms(ALL_AT_A, base), build_terms(ALL_AT_A, spread)
    assert abs(damped.prefactor(0, 1)) < abs(sharp.prefactor(0, 1))
    assert damped.weights == sharp.weights


def test_total_norm_matches_grid_mass():
    terms = build_terms(ALL_AT_A, InteractionConfig(d=0.5, k=5.0, phase_model=PhaseModel.FULL))
    grid = probability_density(terms, GridSpec.covering(terms.centers))
    assert grid.captured_mass == pytest.approx(1.0, abs=1e-9)
    assert total_norm(terms) > 0
    assert total_norm(terms, coherent=False) == pytest.approx(8.0)


def test_truncated_grid_is_flagged(caplog):
    terms = build_terms(ALL_AT_A, InteractionConfig(d=3.0))
    with caplog.at_level(logging.WARNING):
        grid = incoherent_density(terms, GridSpec((-3, 3), (-3, 3), 33))
    assert grid.truncated
    assert grid.captured_mass < 1
    assert grid.integral() == pytest.approx(1.0)
    assert "misses part" in caplog.text


def test_thread_count_does_not_change_the_grid():
    terms = build_terms(ALL_AT_A, InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL))
    grid = GridSpec(points=65)
    single = probability_density(terms, grid, threads=1)
    multi = probability_density(terms, grid, threads=4)
    assert np.array_equal(single.values, multi.values)


def test_density_is_non_negative_with_full_phases():
    terms = build_terms(ALL_AT_A, InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL))
    assert float(probability_density(terms, GridSpec(points=65)).values.min()) >= 0


@pytest.mark.parametrize(
    ("state", "particle", "expected_context"),
    [
        pytest.param(ALL_AT_A, 2, nullcontext(), id="last particle"),
        pytest.param(ALL_AT_A, 3, pytest.raises(InvalidInputError), id="no such particle"),
        pytest.param(
            expand_postselected(1, "B", 0.0),
            0,
            pytest.raises(InvalidInputError),
            id="every group cancels",
        ),
    ],
)
def test_build_terms_rejects_bad_input(state, particle, expected_context):
    with expected_context:
        build_terms(state, InteractionConfig(d=0.5), particle)


@pytest.mark.parametrize(
    ("kwargs", "expected_context"),
    [
        pytest.param({}, nullcontext(), id="defaults"),
        pytest.param({"points": 8}, pytest.raises(InvalidInputError), id="too coarse"),
        pytest.param({"x_range": (1, -1)}, pytest.raises(InvalidInputError), id="reversed range"),
    ],
)
def test_grid_spec_validation(kwargs, expected_context):
    with expected_context:
        GridSpec(**kwargs)


def test_covering_grid_reaches_past_every_center():
    spec = GridSpec.covering([[0.0, 10.2], [-1.0, 0.0]])
    assert spec.x_range == (-16, 16)
    assert spec.covers([[0.0, 10.2]])
    assert GridSpec.covering([[0.0, 0.5]]).x_range == (-8, 8)


def test_density_grid_checks_its_shape():
    with pytest.raises(InvalidInputError):
        DensityGrid(xs=np.arange(3.0), ys=np.arange(2.0), values=np.zeros((3, 2)), cell_area=1.0)


@pytest.mark.parametrize(
    ("d", "k", "phase_model"),
    [
        pytest.param(0.5, 5.0, PhaseModel.NONE, id="phase-free"),
        pytest.param(0.25, 5.0, PhaseModel.FULL, id="full phases"),
        pytest.param(2.0, 3.0, PhaseModel.FULL, id="full phases, strong push"),
    ],
)
def test_all_at_a_density_is_mirror_symmetric(d, k, phase_model):
    terms = build_terms(ALL_AT_A, InteractionConfig(d=d, k=k, phase_model=phase_model))
    mirrored = POINTS * np.array([-1.0, 1.0])
    values = density_at(terms, POINTS)
    assert_allclose(density_at(terms, mirrored), values, rtol=1e-12, atol=1e-15 * float(values.max()))


def test_incoherent_peaks_carry_a_quarter_each():
    terms = build_terms(ALL_AT_A, InteractionConfig(d=6.0))
    grid = incoherent_density(terms, GridSpec.covering(terms.centers))
    xx, yy = np.meshgrid(grid.xs, grid.ys)
    r = np.stack([xx, yy], axis=-1)
    nearest = np.argmin(np.linalg.norm(r[..., None, :] - terms.centers, axis=-1), axis=-1)
    masses = [float(grid.values[nearest == g].sum()) * grid.cell_area for g in range(terms.n_groups)]
    assert_allclose(masses, [0.25] * 4, atol=3e-3)


def _coherent_excess(d: float) -> float:
    terms = build_terms(ALL_AT_A, InteractionConfig(d=d))
    spec = GridSpec.covering(terms.centers)
    coherent, incoherent = probability_density(terms, spec), incoherent_density(terms, spec)
    return float(np.abs(coherent.values - incoherent.values).sum()) * coherent.cell_area


@pytest.mark.parametrize(
    ("d", "lower", "upper"),
    [
        pytest.param(3.0, 0.02, 0.06, id="nearest-pair cross terms still visible"),
        pytest.param(5.0, 0.0, 1e-3, id="cross terms gone"),
    ],
)
def test_incoherent_density_approaches_coherent(d, lower, upper):
    # nearest group pairs overlap as exp(-3 d**2 / 8) across all three particles
    assert lower <= _coherent_excess(d) <= upper
