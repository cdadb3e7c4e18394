"""Detector-plane Gaussian wavepackets for each companion structure.

Lengths are in units of the beam width ``sigma``. A mode is

    exp(-|r - center|**2 / 4) * exp(i * (phase_offset - phase_gradient . r))

so ``phase_gradient`` is the rate at which the phase lag grows across the
beam and a negative ``phase_offset`` is a lag.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Iterable
from enum import Enum

import attrs
import numpy as np
from attrs.validators import ge, gt, instance_of
from numpy.typing import ArrayLike, NDArray

from mzi_pigeonhole._branches import CompanionStructure
from mzi_pigeonhole._errors import InvalidInputError

logger = logging.getLogger(__name__)


class PhaseModel(Enum):
    NONE = "none"
    GEOMETRIC = "geometric"
    FULL = "geometric_plus_interaction"

    @property
    def geometric(self) -> bool:
        return self is not PhaseModel.NONE

    @property
    def interaction(self) -> bool:
        return self is PhaseModel.FULL


_PHASE_MODEL_ALIASES = {"full": PhaseModel.FULL, "geometric+interaction": PhaseModel.FULL}


def to_phase_model(value: PhaseModel | str) -> PhaseModel:
    if isinstance(value, PhaseModel):
        return value
    key = str(value).strip().lower()
    try:
        return _PHASE_MODEL_ALIASES.get(key) or PhaseModel(key)
    except ValueError as e:
        msg = f"unknown phase model {value!r}"
        logger.error(msg)
        raise InvalidInputError(msg) from e


@attrs.frozen
class InteractionConfig:
    """Interaction strength ``d`` (deflection / sigma) and phase ratio ``k`` (r / sigma)."""

    d: float = attrs.field(default=0.0, converter=float, validator=ge(0.0))
    k: float = attrs.field(default=5.0, converter=float, validator=ge(0.0))
    phase_model: PhaseModel = attrs.field(default=PhaseModel.NONE, converter=to_phase_model)
    ensemble_spread: bool = attrs.field(default=False, validator=instance_of(bool))

    @phase_model.validator
    def _check_phase_ratio(self, _attribute: attrs.Attribute, value: PhaseModel) -> None:
        if value.interaction and self.k <= 0:
            msg = f"the interaction phase needs k > 0, got k={self.k}"
            logger.error(msg)
            raise InvalidInputError(msg)


_EXACT_TRIG_VALUES = (-1.0, -0.5, 0.0, 0.5, 1.0)
_EXACT_TRIG_TOLERANCE = 1e-12


def _exact_trig(value: float) -> float:
    """Snap sines and cosines of multiples of ``pi/6`` onto their exact rational values."""
    for exact in _EXACT_TRIG_VALUES:
        if abs(value - exact) < _EXACT_TRIG_TOLERANCE:
            return exact
    return value


@attrs.frozen
class DeflectionGeometry:
    """Beams on a regular polygon (a triangle for three particles).

    Each particle's local ``y`` axis points away from the centre and ``x``
    is ``y`` turned clockwise, so rotating by ``2*pi/n`` maps the frame of
    particle ``i`` onto that of ``i + 1``.
    """

    n: int = attrs.field(default=3, validator=[instance_of(int), ge(1)])

    def check_particle(self, particle: int) -> None:
        if not 0 <= particle < self.n:
            msg = f"{particle = } outside a {self.n}-beam geometry"
            logger.error(msg)
            raise InvalidInputError(msg)

    def angle(self, particle: int) -> float:
        self.check_particle(particle)
        return math.pi / 2 - 2 * math.pi * particle / self.n

    @property
    def positions(self) -> NDArray[np.float64]:
        angles = [self.angle(i) for i in range(self.n)]
        return np.array([[_exact_trig(math.cos(a)), _exact_trig(math.sin(a))] for a in angles])

    def axes(self, particle: int) -> NDArray[np.float64]:
        """Rows are the particle's local unit ``x`` and ``y`` axes in the shared frame."""
        a = self.angle(particle)
        cos_a, sin_a = _exact_trig(math.cos(a)), _exact_trig(math.sin(a))
        return np.array([[sin_a, -cos_a], [cos_a, sin_a]])

    def repulsion(self, particle: int, source: int) -> NDArray[np.float64]:
        """Unit push on ``particle`` away from ``source``, in the particle's local frame."""
        self.check_particle(particle)
        self.check_particle(source)
        if particle == source:
            msg = f"particle {particle} cannot repel itself"
            logger.error(msg)
            raise InvalidInputError(msg)
        half_turn = math.pi * ((source - particle) % self.n) / self.n
        return np.array([-_exact_trig(math.cos(half_turn)), _exact_trig(math.sin(half_turn))])

    def to_global(self, particle: int, vector: ArrayLike) -> NDArray[np.float64]:
        return self.axes(particle).T @ np.asarray(vector, dtype=float)


def _to_vector(value: ArrayLike) -> tuple[float, float]:
    vector = tuple(float(x) for x in np.asarray(value, dtype=float).ravel())
    if len(vector) != 2:
        msg = f"expected a 2-vector, got {value!r}"
        logger.error(msg)
        raise InvalidInputError(msg)
    return vector


@attrs.frozen
class GaussianMode:
    center: tuple[float, float] = attrs.field(converter=_to_vector)
    phase_gradient: tuple[float, float] = attrs.field(default=(0.0, 0.0), converter=_to_vector)
    phase_offset: float = attrs.field(default=0.0, converter=float)
    width: float = attrs.field(default=1.0, converter=float, validator=gt(0.0))


def mode_for(
    particle: int,
    companions: Iterable[int],
    config: InteractionConfig,
    geometry: DeflectionGeometry,
) -> GaussianMode:
    """Mode of ``particle`` after sharing its arm with ``companions``.

    Pairwise deflections add as vectors, so two companions on a triangle
    give a deflection of ``sqrt(3) * d``.
    """
    geometry.check_particle(particle)
    companions = frozenset(companions)
    if particle in companions:
        msg = f"particle {particle} listed among its own companions {sorted(companions)}"
        logger.error(msg)
        raise InvalidInputError(msg)

    center = np.zeros(2)
    for source in sorted(companions):
        center = center + geometry.repulsion(particle, source)
    center = config.d * center

    gradient = 2 * center if config.phase_model.geometric else np.zeros(2)
    offset = -len(companions) * config.k * config.d if config.phase_model.interaction else 0.0
    return GaussianMode(center=center, phase_gradient=gradient, phase_offset=offset)


def modes_for_structure(
    structure: CompanionStructure, config: InteractionConfig, geometry: DeflectionGeometry
) -> tuple[GaussianMode, ...]:
    if structure.n != geometry.n:
        msg = f"structure {structure} has {structure.n} particles, geometry has {geometry.n}"
        logger.error(msg)
        raise InvalidInputError(msg)
    return tuple(
        mode_for(i, structure.companions(i), config, geometry) for i in range(structure.n)
    )


def overlap(a: GaussianMode, b: GaussianMode) -> complex:
    """Normalised inner product ``<a|b>`` of two unit-width modes, in closed form."""
    if a.width != 1.0 or b.width != 1.0:
        msg = f"closed-form overlap needs unit widths, got {a.width} and {b.width}"
        logger.error(msg)
        raise InvalidInputError(msg)

    dcx, dcy = a.center[0] - b.center[0], a.center[1] - b.center[1]
    dgx, dgy = a.phase_gradient[0] - b.phase_gradient[0], a.phase_gradient[1] - b.phase_gradient[1]
    mid_x, mid_y = (a.center[0] + b.center[0]) / 2, (a.center[1] + b.center[1]) / 2

    magnitude = math.exp(-(dcx * dcx + dcy * dcy) / 8 - (dgx * dgx + dgy * dgy) / 2)
    phase = dgx * mid_x + dgy * mid_y + b.phase_offset - a.phase_offset
    return magnitude * cmath.exp(1j * phase)


def evaluate(mode: GaussianMode, r: ArrayLike) -> NDArray[np.complex128] | complex:
    """Unnormalised amplitude at ``r`` (any array whose last axis holds x, y)."""
    r = np.asarray(r, dtype=float)
    x, y = r[..., 0], r[..., 1]
    dx, dy = x - mode.center[0], y - mode.center[1]
    envelope = np.exp(-(dx * dx + dy * dy) / 4)
    phase = mode.phase_offset - (mode.phase_gradient[0] * x + mode.phase_gradient[1] * y)
    values = envelope * np.exp(1j * phase)
    return complex(values) if values.ndim == 0 else values
