"""Single-particle marginal density of the post-selected state.

The marginal of ``|Phi|**2`` for the detected particle is a sum over pairs
of companion groups ``(g, h)`` of ``W[g, h] * conj(phi_g) * phi_h`` where
``W[g, h]`` is the conjugated coefficient product times the overlaps of
every other particle's modes. Diagonal weights are ``|c_g|**2``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from itertools import combinations
from types import MappingProxyType

import attrs
import numpy as np
from attrs.validators import instance_of
from numpy.typing import ArrayLike, NDArray

from mzi_pigeonhole._branches import CompanionStructure, PostSelectedState
from mzi_pigeonhole._errors import (
    InvalidInputError,
    NumericalInvariantError,
    UnsupportedCaseError,
)
from mzi_pigeonhole._modes import (
    DeflectionGeometry,
    GaussianMode,
    InteractionConfig,
    PhaseModel,
    evaluate,
    modes_for_structure,
    overlap,
    to_phase_model,
)
from mzi_pigeonhole._parallel import blocks, ordered_map

logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-12
CAPTURED_MASS_THRESHOLD = 1 - 1e-6
DEFAULT_HALF_WIDTH = 8.0
DEFAULT_POINTS = 257
MIN_POINTS = 16
TAIL_MARGIN = 5.0


def _to_range(value: Sequence[float]) -> tuple[float, float]:
    lo, hi = (float(v) for v in value)
    if not hi > lo:
        msg = f"grid range must be increasing, got {value!r}"
        logger.error(msg)
        raise InvalidInputError(msg)
    return lo, hi


def _check_points(_instance: object, _attribute: attrs.Attribute, value: int) -> None:
    if value < MIN_POINTS:
        msg = f"grid resolution must be at least {MIN_POINTS} points per axis, got {value}"
        logger.error(msg)
        raise InvalidInputError(msg)


@attrs.frozen
class GridSpec:
    """Rectangular sampling grid, in units of sigma."""

    x_range: tuple[float, float] = attrs.field(
        default=(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH), converter=_to_range
    )
    y_range: tuple[float, float] = attrs.field(
        default=(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH), converter=_to_range
    )
    points: int = attrs.field(default=DEFAULT_POINTS, validator=[instance_of(int), _check_points])

    @classmethod
    def covering(
        cls,
        centers: ArrayLike,
        margin: float = TAIL_MARGIN,
        points: int = DEFAULT_POINTS,
        minimum_half_width: float = DEFAULT_HALF_WIDTH,
    ) -> GridSpec:
        """Square grid centred on the origin reaching ``margin`` past every centre."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        reach = float(np.abs(centers).max()) if centers.size else 0.0
        half_width = max(minimum_half_width, math.ceil(reach + margin))
        return cls((-half_width, half_width), (-half_width, half_width), points)

    @property
    def xs(self) -> NDArray[np.float64]:
        return np.linspace(*self.x_range, self.points)

    @property
    def ys(self) -> NDArray[np.float64]:
        return np.linspace(*self.y_range, self.points)

    @property
    def cell_area(self) -> float:
        dx = (self.x_range[1] - self.x_range[0]) / (self.points - 1)
        dy = (self.y_range[1] - self.y_range[0]) / (self.points - 1)
        return dx * dy

    def covers(self, centers: ArrayLike, margin: float = TAIL_MARGIN) -> bool:
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        return bool(
            np.all(centers[:, 0] - margin >= self.x_range[0])
            and np.all(centers[:, 0] + margin <= self.x_range[1])
            and np.all(centers[:, 1] - margin >= self.y_range[0])
            and np.all(centers[:, 1] + margin <= self.y_range[1])
        )


@attrs.frozen(eq=False)
class DensityGrid:
    """Normalised density with ``values[iy, ix]`` sampled at ``(xs[ix], ys[iy])``."""

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    values: NDArray[np.float64] = attrs.field()
    cell_area: float
    captured_mass: float = 1.0
    truncated: bool = False

    @values.validator
    def _check_shape(self, _attribute: attrs.Attribute, value: NDArray[np.float64]) -> None:
        if value.shape != (self.ys.size, self.xs.size):
            msg = f"values shape {value.shape} does not match grid {(self.ys.size, self.xs.size)}"
            logger.error(msg)
            raise InvalidInputError(msg)

    def integral(self) -> float:
        return math.fsum(self.values.ravel()) * self.cell_area

    def moments(self) -> tuple[float, float]:
        """First moments by the same cell sum used for normalisation."""
        column_mass = self.values.sum(axis=0)
        row_mass = self.values.sum(axis=1)
        mean_x = math.fsum(column_mass * self.xs) * self.cell_area
        mean_y = math.fsum(row_mass * self.ys) * self.cell_area
        return mean_x, mean_y


def interaction_phase_between(
    g: CompanionStructure, h: CompanionStructure, config: InteractionConfig
) -> float:
    """Net lag ``h`` gains over ``g`` from the interaction potential, summed over particles."""
    excess = sum(len(g.companions(p)) - len(h.companions(p)) for p in range(g.n))
    return excess * config.k * config.d


def ensemble_damping(theta: float, k: float) -> float:
    """Average of ``exp(i * delta)`` over a spread ``sigma_theta = sqrt(2) * theta / k``."""
    if theta == 0:
        return 1.0
    sigma_theta = math.sqrt(2) * theta / k
    return math.exp(-(sigma_theta**2) / 2)


@attrs.frozen(eq=False)
class DensityTerms:
    """Diagonal weights and unordered-pair cross prefactors for one detected particle."""

    particle: int
    config: InteractionConfig
    groups: tuple[CompanionStructure, ...]
    weights: tuple[float, ...]
    modes: tuple[GaussianMode, ...]
    cross: MappingProxyType[tuple[int, int], complex]
    interaction_phases: MappingProxyType[tuple[int, int], float]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def centers(self) -> NDArray[np.float64]:
        return np.array([mode.center for mode in self.modes])

    def prefactor(self, g: int, h: int) -> complex:
        if g == h:
            return complex(self.weights[g])
        if g < h:
            return self.cross[g, h]
        return self.cross[h, g].conjugate()

    def interaction_phase(self, g: int, h: int) -> float:
        if g == h:
            return 0.0
        return self.interaction_phases[g, h] if g < h else -self.interaction_phases[h, g]


def build_terms(
    state: PostSelectedState,
    config: InteractionConfig,
    particle: int = 0,
    geometry: DeflectionGeometry | None = None,
) -> DensityTerms:
    if not state.nonzero_groups:
        msg = f"post-selected state for pattern {state.pattern} has no surviving group"
        logger.error(msg)
        raise InvalidInputError(msg)
    if not 0 <= particle < state.n:
        msg = f"{particle = } outside a {state.n}-particle state"
        logger.error(msg)
        raise InvalidInputError(msg)

    geometry = geometry or DeflectionGeometry(state.n)
    groups = state.groups
    coefficients = [state.coefficients[g] for g in groups]
    all_modes = [modes_for_structure(g, config, geometry) for g in groups]
    spectators = [p for p in range(state.n) if p != particle]

    cross: dict[tuple[int, int], complex] = {}
    phases: dict[tuple[int, int], float] = {}
    for g, h in combinations(range(len(groups)), 2):
        prefactor = coefficients[g].conjugate() * coefficients[h]
        for p in spectators:
            prefactor *= overlap(all_modes[g][p], all_modes[h][p])
        theta = interaction_phase_between(groups[g], groups[h], config)
        if config.ensemble_spread:
            prefactor *= ensemble_damping(theta, config.k)
        cross[g, h] = prefactor
        phases[g, h] = theta

    logger.debug(f"built {len(groups)} diagonal and {len(cross)} cross terms for {particle = }")
    return DensityTerms(
        particle=particle,
        config=config,
        groups=groups,
        weights=tuple(c.real * c.real + c.imag * c.imag for c in coefficients),
        modes=tuple(modes[particle] for modes in all_modes),
        cross=MappingProxyType(cross),
        interaction_phases=MappingProxyType(phases),
    )


def total_norm(terms: DensityTerms, *, coherent: bool = True) -> float:
    """Integral of the unnormalised marginal, in units of one mode's norm ``2*pi``."""
    parts = list(terms.weights)
    if coherent:
        parts.extend(
            2 * (prefactor * overlap(terms.modes[g], terms.modes[h])).real
            for (g, h), prefactor in terms.cross.items()
        )
    return math.fsum(parts)


def density_at(terms: DensityTerms, r: ArrayLike, *, coherent: bool = True) -> NDArray[np.float64]:
    """Unnormalised marginal at ``r`` (last axis holds x, y)."""
    r = np.asarray(r, dtype=float)
    amplitudes = [
        evaluate(mode, r) if weight else None
        for mode, weight in zip(terms.modes, terms.weights, strict=True)
    ]
    values = np.zeros(r.shape[:-1])
    for weight, amplitude in zip(terms.weights, amplitudes, strict=True):
        if weight:
            values += weight * (amplitude.real**2 + amplitude.imag**2)
    if coherent:
        for (g, h), prefactor in terms.cross.items():
            if prefactor:
                values += 2 * (prefactor * amplitudes[g].conjugate() * amplitudes[h]).real
    return values


def _density_rows(
    terms: DensityTerms, xs: NDArray[np.float64], ys: NDArray[np.float64], coherent: bool
) -> NDArray[np.float64]:
    rows = np.empty((ys.size, xs.size))
    for i, y in enumerate(ys):
        r = np.stack([xs, np.full_like(xs, y)], axis=-1)
        rows[i] = density_at(terms, r, coherent=coherent)
    return rows


def _evaluate_grid(
    terms: DensityTerms, grid: GridSpec, *, coherent: bool, threads: int
) -> DensityGrid:
    live = [c for c, w in zip(terms.centers, terms.weights, strict=True) if w]
    if not grid.covers(live):
        logger.warning(f"grid {grid.x_range} x {grid.y_range} misses part of a {TAIL_MARGIN} sigma tail")

    xs, ys = grid.xs, grid.ys
    parts = ordered_map(
        lambda block: _density_rows(terms, xs, ys[block.start : block.stop], coherent),
        blocks(ys.size, threads),
        threads,
    )
    raw = np.vstack(parts)

    raw_sum = math.fsum(raw.ravel())
    if not raw_sum > 0:
        msg = f"density has non-positive total {raw_sum} on grid {grid}"
        logger.error(msg)
        raise NumericalInvariantError(msg)
    values = raw / (raw_sum * grid.cell_area)

    lowest = float(values.min())
    if lowest < -NEGATIVE_TOLERANCE:
        msg = f"density dips to {lowest} below zero"
        logger.error(msg)
        raise NumericalInvariantError(msg)
    values = np.clip(values, 0.0, None)

    captured = raw_sum * grid.cell_area / (2 * math.pi * total_norm(terms, coherent=coherent))
    truncated = captured < CAPTURED_MASS_THRESHOLD
    if truncated:
        logger.warning(f"grid captures only {captured = :.9f} of the probability mass")
    return DensityGrid(
        xs=xs,
        ys=ys,
        values=values,
        cell_area=grid.cell_area,
        captured_mass=captured,
        truncated=truncated,
    )


def probability_density(
    terms: DensityTerms, grid: GridSpec | None = None, threads: int = 1
) -> DensityGrid:
    return _evaluate_grid(terms, grid or GridSpec(), coherent=True, threads=threads)


def incoherent_density(
    terms: DensityTerms, grid: GridSpec | None = None, threads: int = 1
) -> DensityGrid:
    """As :func:`probability_density` with every cross term dropped."""
    return _evaluate_grid(terms, grid or GridSpec(), coherent=False, threads=threads)


def closed_form_reference(
    x: ArrayLike,
    y: ArrayLike,
    d: float,
    k: float,
    phase_model: PhaseModel | str,
    *,
    pattern: str = "AAA",
    particle: int = 0,
) -> NDArray[np.float64] | float:
    """Printed three-particle, all-at-A marginal for particle 1, unnormalised.

    The geometric-only model uses the full expression with the interaction
    lag switched off.
    """
    phase_model = to_phase_model(phase_model)
    if pattern != "AAA" or particle != 0:
        msg = f"closed form exists only for pattern AAA and the first particle, got {pattern}, {particle}"
        logger.error(msg)
        raise UnsupportedCaseError(msg)

    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    root3 = math.sqrt(3)
    g0 = np.exp(-(x**2 + y**2) / 4)
    g2 = np.exp(-((x + d / 2) ** 2 + (y - root3 * d / 2) ** 2) / 4)
    g3 = np.exp(-((x - d / 2) ** 2 + (y - root3 * d / 2) ** 2) / 4)
    g23 = np.exp(-(x**2 + (y - root3 * d) ** 2) / 4)
    diagonal = g23**2 + g2**2 + g3**2 + g0**2

    if phase_model is PhaseModel.NONE:
        near, far = math.exp(-(d**2) / 4), math.exp(-(d**2) / 2)
        values = (
            diagonal
            - 2 * g23 * g2 * far
            - 2 * g23 * g3 * far
            - 2 * g23 * g0 * near
            + 2 * g2 * g3 * near
            + 2 * g2 * g0 * near
            + 2 * g0 * g3 * near
        )
    else:
        lag = 4 * k * d if phase_model.interaction else 0.0
        near, far = math.exp(-(d**2) / 4 - 4 * d**2), math.exp(-(d**2) / 2 - 8 * d**2)
        values = (
            diagonal
            - 2 * g23 * g2 * np.cos(root3 * d * y + d * x + 5 * d**2 + lag) * far
            - 2 * g23 * g3 * np.cos(root3 * d * y - d * x + 5 * d**2 + lag) * far
            - 2 * g23 * g0 * np.cos(2 * root3 * d * y + 4 * d**2 + lag) * near
            + 2 * g2 * g3 * np.cos(2 * d * x) * near
            + 2 * g2 * g0 * np.cos(root3 * d * y - d * x - d**2) * near
            + 2 * g0 * g3 * np.cos(-root3 * d * y - d * x + d**2) * near
        )
    return float(values) if np.ndim(values) == 0 else values
