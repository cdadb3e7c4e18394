"""Brute-force quadrature used to cross-check the closed forms."""

from __future__ import annotations

import logging
import math
from enum import Enum

import attrs
import numpy as np
from attrs.validators import instance_of
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson, trapezoid

from mzi_pigeonhole._branches import DetectorPattern, expand_postselected
from mzi_pigeonhole._density import DensityGrid
from mzi_pigeonhole._errors import InvalidInputError, UnsupportedCaseError
from mzi_pigeonhole._modes import (
    DeflectionGeometry,
    GaussianMode,
    InteractionConfig,
    evaluate,
    modes_for_structure,
)
from mzi_pigeonhole._parallel import ordered_map

logger = logging.getLogger(__name__)

MIN_POINTS = 33
EXTENT_MARGIN = 6.0
COVERING_MARGIN = 7.0
DEFAULT_HALF_WIDTH = 10.0
DEFAULT_POINTS = 129
MARGINAL_POINTS = 41


class QuadratureRule(Enum):
    TRAPEZOID = "trapezoid"
    SIMPSON = "simpson"

    def integrate(self, values: NDArray, x: NDArray, axis: int = -1) -> NDArray:
        if self is QuadratureRule.SIMPSON:
            return simpson(values, x=x, axis=axis)
        return trapezoid(values, x=x, axis=axis)


def _to_range(value: ArrayLike) -> tuple[float, float]:
    lo, hi = (float(v) for v in np.asarray(value, dtype=float).ravel())
    if not hi > lo:
        msg = f"quadrature range must be increasing, got {value!r}"
        logger.error(msg)
        raise InvalidInputError(msg)
    return lo, hi


@attrs.frozen
class QuadratureSpec:
    rule: QuadratureRule = attrs.field(default=QuadratureRule.SIMPSON, converter=QuadratureRule)
    x_range: tuple[float, float] = attrs.field(
        default=(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH), converter=_to_range
    )
    y_range: tuple[float, float] = attrs.field(
        default=(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH), converter=_to_range
    )
    points: int = attrs.field(default=DEFAULT_POINTS, validator=instance_of(int))

    @points.validator
    def _check_points(self, _attribute: attrs.Attribute, value: int) -> None:
        if value < MIN_POINTS or (self.rule is QuadratureRule.SIMPSON and value % 2 == 0):
            msg = f"{self.rule.value} needs at least {MIN_POINTS} points (odd for Simpson), got {value}"
            logger.error(msg)
            raise InvalidInputError(msg)

    @classmethod
    def covering(
        cls,
        centers: ArrayLike,
        rule: QuadratureRule = QuadratureRule.SIMPSON,
        margin: float = COVERING_MARGIN,
        step: float = 2 * DEFAULT_HALF_WIDTH / (DEFAULT_POINTS - 1),
    ) -> QuadratureSpec:
        """Square box reaching ``margin`` past every centre with at most ``step`` spacing."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        half_width = max(DEFAULT_HALF_WIDTH, math.ceil(float(np.abs(centers).max()) + margin))
        points = max(MIN_POINTS, math.ceil(2 * half_width / step) + 1)
        points += 1 - points % 2
        return cls(rule, (-half_width, half_width), (-half_width, half_width), points)

    @property
    def xs(self) -> NDArray[np.float64]:
        return np.linspace(*self.x_range, self.points)

    @property
    def ys(self) -> NDArray[np.float64]:
        return np.linspace(*self.y_range, self.points)

    def check_extent(self, centers: ArrayLike, margin: float = EXTENT_MARGIN) -> None:
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        inside = (
            np.all(centers[:, 0] - margin >= self.x_range[0])
            and np.all(centers[:, 0] + margin <= self.x_range[1])
            and np.all(centers[:, 1] - margin >= self.y_range[0])
            and np.all(centers[:, 1] + margin <= self.y_range[1])
        )
        if not inside:
            msg = f"quadrature box {self.x_range} x {self.y_range} is not {margin} sigma past every centre"
            logger.error(msg)
            raise InvalidInputError(msg)

    def integrate(self, values: NDArray) -> complex | float:
        """Tensor-product rule over ``values[..., iy, ix]``."""
        inner = self.rule.integrate(values, self.xs, axis=-1)
        return self.rule.integrate(inner, self.ys, axis=-1)

    def integrate_complex(self, values: NDArray[np.complex128]) -> complex:
        return complex(self.integrate(values.real), self.integrate(values.imag))


def _plane(spec: QuadratureSpec) -> NDArray[np.float64]:
    xx, yy = np.meshgrid(spec.xs, spec.ys)
    return np.stack([xx, yy], axis=-1)


def numeric_overlap(a: GaussianMode, b: GaussianMode, spec: QuadratureSpec | None = None) -> complex:
    """``<a|b>`` by quadrature, normalised by the numeric self-overlaps."""
    centers = [a.center, b.center]
    spec = spec or QuadratureSpec.covering(centers)
    spec.check_extent(centers)

    plane = _plane(spec)
    fa, fb = evaluate(a, plane), evaluate(b, plane)
    cross = spec.integrate_complex(fa.conjugate() * fb)
    norm_a = float(spec.integrate(fa.real**2 + fa.imag**2))
    norm_b = float(spec.integrate(fb.real**2 + fb.imag**2))
    return cross / math.sqrt(norm_a * norm_b)


def numeric_marginal_two_particle(
    pattern: DetectorPattern | str,
    chi: float,
    config: InteractionConfig,
    spec: QuadratureSpec | None = None,
    threads: int = 1,
) -> DensityGrid:
    """Marginal of particle 1 by integrating ``|Phi(r1, r2)|**2`` over particle 2.

    The joint amplitude is the explicit sum over companion groups of mode
    products, evaluated one ``r1`` row at a time.
    """
    pattern = pattern if isinstance(pattern, DetectorPattern) else DetectorPattern(pattern)
    if pattern.n != 2:
        msg = f"direct marginalisation is implemented for two particles, got {pattern.n}"
        logger.error(msg)
        raise UnsupportedCaseError(msg)

    state = expand_postselected(2, pattern, chi)
    geometry = DeflectionGeometry(2)
    terms = [
        (coefficient, modes_for_structure(group, config, geometry))
        for group, coefficient in state.coefficients.items()
        if coefficient != 0
    ]
    centers = [mode.center for _, modes in terms for mode in modes]
    spec = spec or QuadratureSpec.covering(
        centers, margin=EXTENT_MARGIN, step=2 * (config.d + 8) / (MARGINAL_POINTS - 1)
    )
    spec.check_extent(centers)
    logger.info(f"marginalising {pattern = !s} on {spec.points}**4 points")

    plane = _plane(spec)
    second = [evaluate(modes[1], plane) for _, modes in terms]
    xs = spec.xs

    def row(y1: float) -> NDArray[np.float64]:
        r1 = np.stack([xs, np.full_like(xs, y1)], axis=-1)
        joint = np.zeros((xs.size, *plane.shape[:-1]), dtype=complex)
        for (coefficient, modes), amplitude_2 in zip(terms, second, strict=True):
            amplitude_1 = evaluate(modes[0], r1)
            joint += coefficient * amplitude_1[:, None, None] * amplitude_2[None, :, :]
        return np.asarray(spec.integrate(joint.real**2 + joint.imag**2), dtype=float)

    marginal = np.vstack(ordered_map(row, spec.ys.tolist(), threads))
    cell_area = (xs[1] - xs[0]) * (spec.ys[1] - spec.ys[0])
    total = math.fsum(marginal.ravel()) * cell_area
    return DensityGrid(xs=xs, ys=spec.ys, values=marginal / total, cell_area=cell_area)


def numeric_expectation(
    grid: DensityGrid, rule: QuadratureRule = QuadratureRule.SIMPSON
) -> tuple[float, float]:
    """First moments by a tensor-product rule, divided by the same rule's total."""
    total = rule.integrate(rule.integrate(grid.values, grid.xs), grid.ys)
    mean_x = rule.integrate(rule.integrate(grid.values * grid.xs[None, :], grid.xs), grid.ys)
    mean_y = rule.integrate(rule.integrate(grid.values * grid.ys[:, None], grid.xs), grid.ys)
    return float(mean_x / total), float(mean_y / total)
