"""Named oracle and invariant checks behind ``mzi-pigeonhole verify``.

Each check returns a small JSON-ready detail dict or raises
:class:`CheckFailedError`; checks are wrapped with ``returns.result.safe`` so
a failing or crashing check is recorded and the rest still run.
"""

from __future__ import annotations

import json
import logging
import math
import os
from collections.abc import Callable, Mapping
from itertools import combinations
from pathlib import Path

import attrs
import numpy as np
from returns.pipeline import is_successful
from returns.result import Result, safe

from mzi_pigeonhole._adapters import IoAdapter
from mzi_pigeonhole._branches import (
    HALF_PI,
    enumerate_assignments,
    expand_postselected,
    predetection_coefficient,
)
from mzi_pigeonhole._density import (
    GridSpec,
    build_terms,
    closed_form_reference,
    density_at,
    probability_density,
)
from mzi_pigeonhole._errors import InvalidInputError
from mzi_pigeonhole._feasibility import (
    CODATA,
    beam_deflection_from_constants,
    coulomb_strength,
    electron_design_point,
)
from mzi_pigeonhole._formats import density_to_csv, sweep_to_csv
from mzi_pigeonhole._modes import (
    DeflectionGeometry,
    InteractionConfig,
    PhaseModel,
    modes_for_structure,
    overlap,
)
from mzi_pigeonhole._observables import (
    analytic_moments,
    apparent_effect_window,
    momentum_sum,
    slope_at_zero,
    slope_sign_changes,
    sweep,
)
from mzi_pigeonhole._quadrature import (
    numeric_expectation,
    numeric_marginal_two_particle,
    numeric_overlap,
)
from mzi_pigeonhole._registries import OutputFormat

logger = logging.getLogger(__name__)

TOLERANCES_ENV_VAR = "MZI_PIGEONHOLE_TOLERANCES"

DEFAULT_TOLERANCES = {
    "overlap_rtol": 1e-8,
    "overlap_atol": 1e-14,
    "closed_form_rtol": 1e-9,
    "moment_atol": 1e-6,
    "zero_slope_atol": 1e-3,
    "incoherent_slope_atol": 1e-6,
    "large_d_atol": 1e-3,
    "together_slope_rtol": 0.02,
    "momentum_atol": 1e-9,
    "effect_fraction": 0.45,
    "constants_rtol": 1e-6,
}

OVERLAP_DS = (0.0, 0.25, 1.0, 3.0)
CLOSED_FORM_DS = (0.0, 0.1, 0.25, 1.0, 3.0)
PHASE_KS = (0.0, 5.0)
SPECTATOR_DS = (0.1, 0.5, 1.0, 2.0)
MARGINAL_DS = (0.25, 1.0, 3.0)
SLOPE_DS = (0.0, 0.005, 0.01)


class CheckFailedError(AssertionError):
    """A verification check found a value outside its tolerance."""


def _require(condition: bool, msg: str) -> None:
    if not condition:
        raise CheckFailedError(msg)


@attrs.frozen
class Check:
    name: str
    fn: Callable[[Mapping[str, float]], dict]
    quick: bool = False


def _phase_models(k: float) -> tuple[PhaseModel, ...]:
    if k == 0:
        return (PhaseModel.NONE, PhaseModel.GEOMETRIC)
    return (PhaseModel.FULL,)


def check_branch_golden(_tolerances: Mapping[str, float]) -> dict:
    state = expand_postselected(3, "AAA", HALF_PI)
    expected = {"{123}": 1, "{12|3}": -1, "{13|2}": -1, "{23|1}": -1}
    for text, sign in expected.items():
        got = state.coefficient(text)
        _require(got == sign * complex(1, -1), f"{text}: {got} != {sign}*(1-i)")
    for assignment in enumerate_assignments(3):
        got = predetection_coefficient(assignment, HALF_PI)
        _require(got == 1j**assignment.n_right, f"{assignment}: {got}")

    split = expand_postselected(3, "ABB", HALF_PI)
    signs = [split.coefficient(t) / complex(1, -1) for t in ("{123}", "{12|3}", "{13|2}", "{23|1}")]
    _require(signs == [1, 1, 1, -1], f"ABB signs {signs}")
    return {"groups": len(state.groups)}


def check_two_particle_cancellation(_tolerances: Mapping[str, float]) -> dict:
    state = expand_postselected(2, "AA", HALF_PI)
    _require(state.coefficient("{12}") == 0, f"same-arm group survives: {state.coefficient('{12}')}")
    _require(state.coefficient("{1|2}") == 2j, f"split group {state.coefficient('{1|2}')}")
    return {"same_arm": 0, "split": "2i"}


def check_overlaps(tolerances: Mapping[str, float]) -> dict:
    rtol, atol = tolerances["overlap_rtol"], tolerances["overlap_atol"]
    state = expand_postselected(3, "AAA", HALF_PI)
    geometry = DeflectionGeometry(3)
    worst = worst_absolute = 0.0
    compared = floored = 0
    for d in OVERLAP_DS:
        for k in PHASE_KS:
            for model in _phase_models(k):
                config = InteractionConfig(d=d, k=k, phase_model=model)
                modes = [modes_for_structure(g, config, geometry) for g in state.groups]
                for p in range(3):
                    for g, h in combinations(range(len(modes)), 2):
                        a, b = modes[g][p], modes[h][p]
                        exact, numeric = overlap(a, b), numeric_overlap(a, b)
                        error = abs(exact - numeric)
                        _require(
                            error <= max(rtol * abs(exact), atol),
                            f"overlap {d = } {k = } {model.value} {p = } ({g},{h}): {error = }",
                        )
                        worst = max(worst, error / max(abs(exact), atol))
                        worst_absolute = max(worst_absolute, error)
                        floored += error > rtol * abs(exact)
                        compared += 1
    return {
        "compared": compared,
        "worst_relative": worst,
        "worst_absolute": worst_absolute,
        "within_absolute_floor_only": floored,
    }


def check_closed_form(tolerances: Mapping[str, float]) -> dict:
    rtol = tolerances["closed_form_rtol"]
    state = expand_postselected(3, "AAA", HALF_PI)
    worst = 0.0
    for d in CLOSED_FORM_DS:
        for k in PHASE_KS:
            for model in _phase_models(k):
                terms = build_terms(state, InteractionConfig(d=d, k=k, phase_model=model))
                grid = GridSpec.covering(terms.centers, points=65)
                xx, yy = np.meshgrid(grid.xs, grid.ys)
                engine = density_at(terms, np.stack([xx, yy], axis=-1))
                reference = closed_form_reference(xx, yy, d, k, model)
                engine = engine / math.fsum(engine.ravel())
                reference = reference / math.fsum(reference.ravel())
                floor = 1e-12 * float(reference.max())
                error = np.abs(engine - reference) / np.maximum(np.abs(reference), floor)
                worst = max(worst, float(error.max()))
                _require(float(error.max()) <= rtol, f"closed form {d = } {k = } {model.value}: {error.max()}")
    return {"worst_relative": worst}


def check_moments(tolerances: Mapping[str, float]) -> dict:
    atol = tolerances["moment_atol"]
    worst = 0.0
    for pattern in ("AAA", "ABB"):
        state = expand_postselected(3, pattern, HALF_PI)
        for d in (0.25, 1.0):
            for model in (PhaseModel.NONE, PhaseModel.FULL):
                for particle in range(3):
                    terms = build_terms(state, InteractionConfig(d=d, k=5.0, phase_model=model), particle)
                    analytic = np.array(analytic_moments(terms))
                    grid = probability_density(terms, GridSpec.covering(terms.centers))
                    for numeric in (np.array(grid.moments()), np.array(numeric_expectation(grid))):
                        error = float(np.abs(analytic - numeric).max())
                        worst = max(worst, error)
                        _require(error <= atol, f"moments {pattern} {d = } {model.value} {particle = }: {error}")
    return {"worst_abs": worst}


def check_two_particle_marginals(tolerances: Mapping[str, float]) -> dict:
    atol = tolerances["moment_atol"]
    for d in MARGINAL_DS:
        config = InteractionConfig(d=d)
        same = numeric_expectation(numeric_marginal_two_particle("AA", HALF_PI, config))
        _require(math.hypot(*same) <= atol, f"AA marginal moved by {same} at {d = }")
        apart = numeric_expectation(numeric_marginal_two_particle("AB", HALF_PI, config))
        _require(math.hypot(apart[0], apart[1] - d) <= atol, f"AB marginal at {apart}, expected (0, {d})")
    return {"ds": list(MARGINAL_DS)}


def check_phase_free_sweeps(tolerances: Mapping[str, float]) -> dict:
    together = sweep("AAA", ds=SLOPE_DS)
    baseline = sweep("AAA", ds=SLOPE_DS, coherent=False)
    zero_slope = slope_at_zero(together)
    incoherent_slope = slope_at_zero(baseline)
    _require(abs(zero_slope) <= tolerances["zero_slope_atol"], f"AAA slope {zero_slope}")
    _require(
        abs(incoherent_slope - math.sqrt(3) / 2) <= tolerances["incoherent_slope_atol"],
        f"incoherent slope {incoherent_slope}",
    )

    far = sweep("AAA", ds=[6.0])
    far_baseline = sweep("AAA", ds=[6.0], coherent=False)
    gap = abs(float(far.y(0)[0] - far_baseline.y(0)[0]))
    _require(gap <= tolerances["large_d_atol"], f"AAA at d=6 differs from incoherent by {gap}")

    split = sweep("ABB", ds=SLOPE_DS)
    split_slope = slope_at_zero(split, 0)
    _require(
        abs(split_slope / math.sqrt(3) - 1) <= tolerances["together_slope_rtol"],
        f"ABB particle 1 slope {split_slope}",
    )
    spectators = sweep("ABB", ds=SPECTATOR_DS)
    spectator_baseline = sweep("ABB", ds=SPECTATOR_DS, coherent=False)
    for p in (1, 2):
        gap_y = float(np.abs(spectators.y(p) - spectator_baseline.y(p)).max())
        _require(gap_y <= tolerances["moment_atol"], f"ABB particle {p + 1} <y> off incoherent by {gap_y}")

    residual = 0.0
    for pattern in ("AAA", "ABB"):
        for d in (0.0, *SPECTATOR_DS):
            for model in (PhaseModel.NONE, PhaseModel.FULL):
                config = InteractionConfig(d=d, k=5.0, phase_model=model)
                residual = max(residual, float(np.hypot(*momentum_sum(pattern, HALF_PI, config))))
    _require(residual <= tolerances["momentum_atol"], f"momentum residual {residual}")
    return {
        "aaa_slope": zero_slope,
        "incoherent_slope": incoherent_slope,
        "abb_slope": split_slope,
        "momentum_residual": residual,
    }


def check_full_phase_sweep(tolerances: Mapping[str, float]) -> dict:
    curve = sweep("AAA", k=5.0, phase_model=PhaseModel.FULL)
    window = (curve.ds >= 0.15) & (curve.ds <= 0.35)
    lowest = float(curve.y(0)[window].min())
    _require(lowest < 0, f"<y> stays non-negative near d=0.25 (min {lowest})")
    early = slope_sign_changes(curve, 0, 0.0, 0.7)
    late = slope_sign_changes(curve, 0, 0.8, 1.5)
    _require(early >= 1 and late == 0, f"turning points below 0.7: {early}, in [0.8, 1.5]: {late}")

    fine_ds = np.linspace(0.0, 0.01, 101)
    fine = sweep("AAA", k=5.0, phase_model=PhaseModel.FULL, ds=fine_ds)
    fine_baseline = sweep("AAA", k=5.0, phase_model=PhaseModel.FULL, ds=fine_ds, coherent=False)
    effect = apparent_effect_window(fine, fine_baseline, fraction=tolerances["effect_fraction"])
    _require(0.005 <= effect < 0.01, f"apparent effect window ends at d={effect}")
    return {"min_y_near_quarter": lowest, "turning_points": early, "effect_window": effect}


def check_feasibility(tolerances: Mapping[str, float]) -> dict:
    rtol = tolerances["constants_rtol"]
    a0 = CODATA.bohr_radius
    _require(abs(CODATA.derived_bohr_radius / a0 - 1) <= rtol, "Bohr radius does not follow from constants")
    _require(f"{2 * a0:.3g}" == "1.06e-10", f"2 a0 = {2 * a0}")

    point = electron_design_point(5.0, 0.005)
    sigma = point.beam.beam_width
    _require(abs(sigma / (0.25 * a0) - 1) <= 1e-12, f"sigma = {sigma}")
    d, delta_r = coulomb_strength(sigma, 5 * sigma)
    _require(abs(d / 0.005 - 1) <= 1e-12, f"d = {d}")
    via_constants = beam_deflection_from_constants(point.beam.path_length, point.beam.wavelength, 5 * sigma)
    _require(abs(via_constants / delta_r - 1) <= rtol, f"delta_r {via_constants} vs {delta_r}")
    return {"sigma_m": sigma, "delta_r_m": delta_r}


def check_determinism(_tolerances: Mapping[str, float]) -> dict:
    state = expand_postselected(3, "AAA", HALF_PI)
    terms = build_terms(state, InteractionConfig(d=0.25, k=5.0, phase_model=PhaseModel.FULL))
    grid = GridSpec(points=65)
    densities = {density_to_csv(probability_density(terms, grid, threads)) for threads in (1, 2, 8)}
    curves = {
        sweep_to_csv(sweep("AAA", ds=np.linspace(0, 1, 41), threads=threads)) for threads in (1, 2, 8)
    }
    _require(len(densities) == 1 and len(curves) == 1, "outputs differ between thread counts")
    return {"threads": [1, 2, 8]}


CHECKS = (
    Check("branches.golden", check_branch_golden, quick=True),
    Check("branches.two_particle_cancellation", check_two_particle_cancellation, quick=True),
    Check("overlap.closed_form_vs_quadrature", check_overlaps, quick=True),
    Check("feasibility.design_point", check_feasibility),
    Check("density.closed_form_reference", check_closed_form),
    Check("moments.analytic_vs_grid", check_moments),
    Check("marginal.two_particle", check_two_particle_marginals),
    Check("sweep.phase_free", check_phase_free_sweeps),
    Check("sweep.full_phases", check_full_phase_sweep),
    Check("determinism.threads", check_determinism),
)


def _parse_tolerances(raw: object, source: str) -> dict[str, float]:
    if not isinstance(raw, Mapping):
        msg = f"tolerances in {source} must be a JSON object, got {type(raw).__name__}"
        logger.error(msg)
        raise InvalidInputError(msg)
    unknown = set(raw) - set(DEFAULT_TOLERANCES)
    if unknown:
        msg = f"unknown tolerances {sorted(unknown)} in {source}"
        logger.error(msg)
        raise InvalidInputError(msg)
    try:
        return {name: float(value) for name, value in raw.items()}
    except (TypeError, ValueError) as e:
        msg = f"tolerances in {source} must be numbers: {raw!r}"
        logger.error(msg)
        raise InvalidInputError(msg) from e


def load_tolerances(adapter: IoAdapter | None = None, path: str | Path | None = None) -> dict[str, float]:
    """Defaults, then the ``--tolerances`` file, then the environment override."""
    tolerances = dict(DEFAULT_TOLERANCES)
    if path is not None:
        if adapter is None or not adapter.exists(path):
            msg = f"tolerance file {path} not found"
            logger.error(msg)
            raise InvalidInputError(msg)
        tolerances.update(_parse_tolerances(adapter.read(path, OutputFormat.JSON), str(path)))

    raw = os.environ.get(TOLERANCES_ENV_VAR)
    if raw:
        try:
            override = json.loads(raw)
        except json.JSONDecodeError as e:
            msg = f"{TOLERANCES_ENV_VAR} is not valid JSON"
            logger.error(msg)
            raise InvalidInputError(msg) from e
        tolerances.update(_parse_tolerances(override, TOLERANCES_ENV_VAR))
    return tolerances


def _entry(name: str, result: Result[dict, Exception]) -> dict:
    if is_successful(result):
        return {"name": name, "passed": True, "detail": result.unwrap()}
    error = result.failure()
    logger.warning(f"check {name} failed: {error}")
    return {"name": name, "passed": False, "error": f"{type(error).__name__}: {error}"}


def run_checks(tolerances: Mapping[str, float] | None = None, *, quick: bool = False) -> dict:
    tolerances = dict(DEFAULT_TOLERANCES) if tolerances is None else dict(tolerances)
    selected = [check for check in CHECKS if check.quick or not quick]
    logger.info(f"running {len(selected)} checks, {quick = }")
    entries = [_entry(check.name, safe(check.fn)(tolerances)) for check in selected]
    return {
        "passed": all(entry["passed"] for entry in entries),
        "quick": quick,
        "tolerances": tolerances,
        "checks": entries,
    }

