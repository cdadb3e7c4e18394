from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from enum import Enum

import attrs
import numpy as np
from numpy.typing import ArrayLike, NDArray

from mzi_pigeonhole._branches import (
    HALF_PI,
    DetectorPattern,
    PostSelectedState,
    expand_postselected,
)
from mzi_pigeonhole._density import (
    DensityTerms,
    GridSpec,
    build_terms,
    probability_density,
)
from mzi_pigeonhole._errors import InvalidInputError, NumericalInvariantError
from mzi_pigeonhole._modes import (
    DeflectionGeometry,
    InteractionConfig,
    PhaseModel,
    overlap,
    to_phase_model,
)
from mzi_pigeonhole._parallel import ordered_map

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-9
SLOPE_WINDOW = 0.02
DEFAULT_EFFECT_FRACTION = 0.45


class MomentMethod(Enum):
    ANALYTIC = "analytic"
    GRID = "grid"


def default_d_grid(phase_model: PhaseModel | str) -> NDArray[np.float64]:
    """0..3 in steps of 0.01, or 0..1.5 in steps of 0.002 when the interaction phase is on."""
    if to_phase_model(phase_model).interaction:
        return np.linspace(0.0, 1.5, 751)
    return np.linspace(0.0, 3.0, 301)


def _check_d_grid(ds: ArrayLike) -> NDArray[np.float64]:
    ds = np.asarray(ds, dtype=float)
    if ds.ndim != 1 or ds.size == 0 or np.any(ds < 0) or np.any(np.diff(ds) <= 0):
        msg = f"d-grid must be a non-empty ascending sequence of d >= 0, got {ds!r}"
        logger.error(msg)
        raise InvalidInputError(msg)
    return ds


@attrs.frozen(eq=False)
class SweepCurve:
    """Per-particle ``(<x>, <y>)`` in each particle's local frame along a d-grid.

    ``means[i, j]`` holds the moments of ``particles[j]`` at ``ds[i]``.
    """

    ds: NDArray[np.float64] = attrs.field(converter=_check_d_grid)
    means: NDArray[np.float64] = attrs.field(converter=lambda v: np.asarray(v, dtype=float))
    particles: tuple[int, ...]
    pattern: str
    chi: float
    k: float
    phase_model: PhaseModel = attrs.field(converter=to_phase_model)
    ensemble_spread: bool = False
    coherent: bool = True

    @means.validator
    def _check_means(self, _attribute: attrs.Attribute, value: NDArray[np.float64]) -> None:
        if value.shape != (self.ds.size, len(self.particles), 2):
            msg = f"means shape {value.shape} does not match {self.ds.size} d-points"
            logger.error(msg)
            raise InvalidInputError(msg)

    def _column(self, particle: int) -> int:
        try:
            return self.particles.index(particle)
        except ValueError as e:
            msg = f"{particle = } not in sweep over {self.particles}"
            logger.error(msg)
            raise InvalidInputError(msg) from e

    def x(self, particle: int = 0) -> NDArray[np.float64]:
        return self.means[:, self._column(particle), 0]

    def y(self, particle: int = 0) -> NDArray[np.float64]:
        return self.means[:, self._column(particle), 1]

    def snapshot(self) -> dict:
        return {
            "pattern": self.pattern,
            "chi": self.chi,
            "k": self.k,
            "phase_model": self.phase_model.value,
            "ensemble_spread": self.ensemble_spread,
            "coherent": self.coherent,
        }


def analytic_moments(terms: DensityTerms, *, coherent: bool = True) -> tuple[float, float]:
    """Exact first moments of the marginal from Gaussian integrals.

    For unit-width modes ``int r conj(phi_g) phi_h`` is the overlap times
    ``m + i q`` with ``m`` the centre midpoint and ``q`` the gradient
    difference.
    """
    num_x: list[float] = []
    num_y: list[float] = []
    norm: list[float] = []
    pairs = (
        [(g, h) for g in range(terms.n_groups) for h in range(terms.n_groups)]
        if coherent
        else [(g, g) for g in range(terms.n_groups)]
    )
    for g, h in pairs:
        weight = terms.prefactor(g, h)
        if weight == 0:
            continue
        a, b = terms.modes[g], terms.modes[h]
        ws = weight * overlap(a, b)
        mid_x, mid_y = (a.center[0] + b.center[0]) / 2, (a.center[1] + b.center[1]) / 2
        q_x, q_y = a.phase_gradient[0] - b.phase_gradient[0], a.phase_gradient[1] - b.phase_gradient[1]
        num_x.append((ws * complex(mid_x, q_x)).real)
        num_y.append((ws * complex(mid_y, q_y)).real)
        norm.append(ws.real)

    total = math.fsum(norm)
    if not total > 0:
        msg = f"marginal has non-positive norm {total}"
        logger.error(msg)
        raise NumericalInvariantError(msg)
    return math.fsum(num_x) / total, math.fsum(num_y) / total


def expectation(
    state: PostSelectedState,
    config: InteractionConfig,
    particle: int = 0,
    grid: GridSpec | None = None,
    *,
    method: MomentMethod = MomentMethod.ANALYTIC,
    geometry: DeflectionGeometry | None = None,
    threads: int = 1,
) -> tuple[float, float]:
    terms = build_terms(state, config, particle, geometry)
    if method is MomentMethod.ANALYTIC:
        return analytic_moments(terms)
    grid = grid or GridSpec.covering(terms.centers)
    return probability_density(terms, grid, threads).moments()


def incoherent_expectation(
    state: PostSelectedState,
    config: InteractionConfig,
    particle: int = 0,
    geometry: DeflectionGeometry | None = None,
) -> tuple[float, float]:
    """Mode centres of the surviving groups averaged with weights ``|c_g|**2``."""
    terms = build_terms(state, config, particle, geometry)
    total = math.fsum(terms.weights)
    mean_x = math.fsum(w * m.center[0] for w, m in zip(terms.weights, terms.modes, strict=True))
    mean_y = math.fsum(w * m.center[1] for w, m in zip(terms.weights, terms.modes, strict=True))
    return mean_x / total, mean_y / total


def _moments_at(
    state: PostSelectedState,
    config: InteractionConfig,
    particles: Sequence[int],
    *,
    coherent: bool,
    method: MomentMethod,
    grid: GridSpec | None,
) -> list[tuple[float, float]]:
    geometry = DeflectionGeometry(state.n)
    if not coherent:
        return [incoherent_expectation(state, config, p, geometry) for p in particles]
    return [
        expectation(state, config, p, grid, method=method, geometry=geometry) for p in particles
    ]


def _check_uniform_symmetry(curve: SweepCurve) -> None:
    """All particles share ``<y>`` and have zero ``<x>`` when every detector agrees."""
    worst_x = float(np.abs(curve.means[:, :, 0]).max())
    worst_y = float(np.abs(curve.means[:, :, 1] - curve.means[:, :1, 1]).max())
    if worst_x > SYMMETRY_TOLERANCE or worst_y > SYMMETRY_TOLERANCE:
        msg = f"uniform-pattern symmetry broken: {worst_x = } {worst_y = }"
        logger.error(msg)
        raise NumericalInvariantError(msg)


def sweep(
    pattern: DetectorPattern | str,
    chi: float = HALF_PI,
    k: float = 5.0,
    phase_model: PhaseModel | str = PhaseModel.NONE,
    ds: ArrayLike | None = None,
    *,
    ensemble_spread: bool = False,
    particles: Sequence[int] | None = None,
    coherent: bool = True,
    method: MomentMethod = MomentMethod.ANALYTIC,
    grid: GridSpec | None = None,
    threads: int = 1,
) -> SweepCurve:
    pattern = pattern if isinstance(pattern, DetectorPattern) else DetectorPattern(pattern)
    phase_model = to_phase_model(phase_model)
    ds = _check_d_grid(default_d_grid(phase_model) if ds is None else ds)
    particles = tuple(range(pattern.n)) if particles is None else tuple(particles)
    state = expand_postselected(pattern.n, pattern, chi)
    logger.info(
        f"sweeping {pattern = !s} {phase_model = } {k = } over {ds.size} points, {coherent = }"
    )

    def at(d: float) -> list[tuple[float, float]]:
        config = InteractionConfig(
            d=d, k=k, phase_model=phase_model, ensemble_spread=ensemble_spread
        )
        return _moments_at(
            state, config, particles, coherent=coherent, method=method, grid=grid
        )

    curve = SweepCurve(
        ds=ds,
        means=ordered_map(at, ds.tolist(), threads),
        particles=particles,
        pattern=str(pattern),
        chi=chi,
        k=k,
        phase_model=phase_model,
        ensemble_spread=ensemble_spread,
        coherent=coherent,
    )
    if pattern.is_uniform and particles == tuple(range(pattern.n)):
        _check_uniform_symmetry(curve)
    return curve


def momentum_sum(
    pattern: DetectorPattern | str,
    chi: float,
    config: InteractionConfig,
) -> NDArray[np.float64]:
    """Vector sum of every particle's mean displacement in the shared frame."""
    pattern = pattern if isinstance(pattern, DetectorPattern) else DetectorPattern(pattern)
    state = expand_postselected(pattern.n, pattern, chi)
    geometry = DeflectionGeometry(pattern.n)
    displacements = [
        geometry.to_global(p, expectation(state, config, p, geometry=geometry))
        for p in range(pattern.n)
    ]
    return np.array([math.fsum(v[0] for v in displacements), math.fsum(v[1] for v in displacements)])


def slope_at_zero(curve: SweepCurve, particle: int = 0) -> float:
    """Slope of ``<y>`` at ``d = 0`` from the two smallest positive d-points.

    ``<y>`` is odd in ``d``, so each one-sided quotient equals the central
    difference over ``[-h, h]`` and its error is even in ``h``; the two
    quotients are combined by Richardson extrapolation on that basis.
    """
    positive = np.flatnonzero((curve.ds > 0) & (curve.ds <= SLOPE_WINDOW))
    if positive.size < 2:
        msg = f"slope needs two d-points in (0, {SLOPE_WINDOW}], found {positive.size}"
        logger.error(msg)
        raise InvalidInputError(msg)

    ys = curve.y(particle)
    zero = np.flatnonzero(curve.ds == 0)
    origin = float(ys[zero[0]]) if zero.size else 0.0
    i1, i2 = positive[:2]
    h1, h2 = float(curve.ds[i1]), float(curve.ds[i2])
    q1, q2 = (float(ys[i1]) - origin) / h1, (float(ys[i2]) - origin) / h2
    return (h2 * h2 * q1 - h1 * h1 * q2) / (h2 * h2 - h1 * h1)


def slope_sign_changes(
    curve: SweepCurve, particle: int = 0, d_min: float = 0.0, d_max: float = math.inf
) -> int:
    """Number of turning points of ``<y>(d)`` with ``d_min <= d <= d_max``."""
    inside = (curve.ds >= d_min) & (curve.ds <= d_max)
    ds, ys = curve.ds[inside], curve.y(particle)[inside]
    signs = np.sign(np.diff(ys) / np.diff(ds))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def apparent_effect_window(
    curve: SweepCurve,
    incoherent: SweepCurve,
    particle: int = 0,
    fraction: float = DEFAULT_EFFECT_FRACTION,
) -> float:
    """Largest d up to which ``|<y>|`` stays within ``fraction`` of the incoherent ``<y>``."""
    if not np.array_equal(curve.ds, incoherent.ds):
        msg = "coherent and incoherent curves must share a d-grid"
        logger.error(msg)
        raise InvalidInputError(msg)

    window = 0.0
    for d, y, baseline in zip(curve.ds, curve.y(particle), incoherent.y(particle), strict=True):
        if baseline == 0:
            continue
        if abs(y) > fraction * abs(baseline):
            break
        window = float(d)
    return window
