"""Physical-units calculator for an electron version of the experiment.

Everything here is in SI units; the rest of the package works in units of
the beam width.
"""

from __future__ import annotations

import logging
import math

import attrs
from attrs.validators import gt
from scipy import constants as codata

from mzi_pigeonhole._errors import InfeasibleDesignError, InvalidInputError

logger = logging.getLogger(__name__)

DISTINGUISHABLE_RATIO = 5.0
CHALLENGING_DELTA_R = 1e-12
MIN_ELL_OVER_SIGMA = 100.0
MAX_PATH_LENGTH = 1.0
MIN_WAVELENGTH = 1e-14
DEFAULT_KINETIC_ENERGY_EV = 40e3


def _positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            msg = f"{name} must be positive, got {value!r}"
            logger.error(msg)
            raise InvalidInputError(msg)


@attrs.frozen
class PhysicalConstants:
    hbar: float = codata.hbar
    planck: float = codata.h
    speed_of_light: float = codata.c
    electron_mass: float = codata.m_e
    elementary_charge: float = codata.e
    vacuum_permittivity: float = codata.epsilon_0
    bohr_radius: float = codata.physical_constants["Bohr radius"][0]

    @property
    def derived_bohr_radius(self) -> float:
        """``4 pi eps0 hbar**2 / (m e**2)``."""
        return (
            4 * math.pi * self.vacuum_permittivity * self.hbar**2
            / (self.electron_mass * self.elementary_charge**2)
        )

    @property
    def electron_rest_energy_ev(self) -> float:
        return self.electron_mass * self.speed_of_light**2 / self.elementary_charge


CODATA = PhysicalConstants()


@attrs.frozen
class BeamParameters:
    path_length: float = attrs.field(validator=gt(0.0))
    wavelength: float = attrs.field(validator=gt(0.0))
    beam_width: float = attrs.field(validator=gt(0.0))
    beam_separation: float = attrs.field(validator=gt(0.0))
    particle_mass: float = attrs.field(default=CODATA.electron_mass, validator=gt(0.0))
    particle_charge: float = attrs.field(default=CODATA.elementary_charge, validator=gt(0.0))

    @property
    def r_over_sigma(self) -> float:
        return self.beam_separation / self.beam_width


@attrs.frozen
class InteractionPhysics:
    """Only the potential-time product ``delta_v * t`` is ever needed, so it is stored whole."""

    potential_time: float
    d: float
    theta_i: float
    delta_r: float

    @classmethod
    def from_strength(
        cls, d: float, beam: BeamParameters, constants: PhysicalConstants = CODATA
    ) -> InteractionPhysics:
        theta_i = interaction_phase(beam.beam_separation, beam.beam_width, d)
        return cls(
            potential_time=constants.hbar * theta_i,
            d=d,
            theta_i=theta_i,
            delta_r=beam.beam_width * d,
        )


def sigma_min(ell: float, lam: float) -> float:
    """Smallest beam width at the detector after a path ``ell`` at wavelength ``lam``."""
    _positive(ell=ell, lam=lam)
    return math.sqrt(ell * lam / (2 * math.pi))


def deflection_angle(delta_r: float, ell: float) -> float:
    _positive(delta_r=delta_r, ell=ell)
    return 2 * delta_r / ell


def geometric_phase(s: float, sigma: float, d: float) -> float:
    """Phase difference across a distance ``s`` of a beam tilted by a deflection ``d``."""
    _positive(sigma=sigma)
    return 2 * (s / sigma) * d


def interaction_phase(r: float, sigma: float, d: float) -> float:
    _positive(r=r, sigma=sigma)
    return (r / sigma) * d


def strength_from_potential(potential_time: float, beam: BeamParameters, hbar: float = CODATA.hbar) -> float:
    """Deflection strength ``d`` produced by a potential step held for a time ``t``."""
    return (
        potential_time * beam.path_length * beam.wavelength
        / (2 * math.pi * hbar * beam.beam_separation * beam.beam_width)
    )


def coulomb_strength(
    sigma: float, r: float, constants: PhysicalConstants = CODATA
) -> tuple[float, float]:
    """Interaction strength ``d`` and deflection ``delta_r`` of two electrons ``r`` apart."""
    _positive(sigma=sigma, r=r)
    d = (sigma**2 / r**2) * sigma / (2 * constants.bohr_radius)
    return d, sigma * d


def beam_deflection_from_constants(
    ell: float, lam: float, r: float, constants: PhysicalConstants = CODATA
) -> float:
    """Coulomb deflection written with the raw constants rather than the Bohr radius."""
    _positive(ell=ell, lam=lam, r=r)
    coupling = (
        constants.electron_mass * constants.elementary_charge**2
        / (4 * math.pi * constants.vacuum_permittivity * constants.hbar**2)
    )
    return 0.5 * coupling * (ell * lam) ** 2 / (4 * math.pi**2 * r**2)


def electron_wavelength(kinetic_energy_ev: float, constants: PhysicalConstants = CODATA) -> float:
    """Relativistic de Broglie wavelength."""
    _positive(kinetic_energy_ev=kinetic_energy_ev)
    rest = constants.electron_rest_energy_ev
    pc_ev = math.sqrt(kinetic_energy_ev**2 + 2 * kinetic_energy_ev * rest)
    return constants.planck * constants.speed_of_light / (pc_ev * constants.elementary_charge)


def nonrelativistic_wavelength(
    kinetic_energy_ev: float, constants: PhysicalConstants = CODATA
) -> float:
    _positive(kinetic_energy_ev=kinetic_energy_ev)
    energy = kinetic_energy_ev * constants.elementary_charge
    return constants.planck / math.sqrt(2 * constants.electron_mass * energy)


def electron_kinetic_energy(wavelength: float, constants: PhysicalConstants = CODATA) -> float:
    """Kinetic energy in eV of an electron with the given de Broglie wavelength."""
    _positive(wavelength=wavelength)
    rest = constants.electron_rest_energy_ev
    pc_ev = constants.planck * constants.speed_of_light / (wavelength * constants.elementary_charge)
    return math.hypot(pc_ev, rest) - rest


def min_wavelength_spread(ell: float, lam: float) -> float:
    """Smallest ``delta_lambda / lambda`` for wavepackets about one beam width long."""
    _positive(ell=ell, lam=lam)
    return math.sqrt(2 * math.pi * lam / ell)


@attrs.frozen
class DesignPoint:
    beam: BeamParameters
    interaction: InteractionPhysics
    kinetic_energy_ev: float
    relativistic_deviation: float
    warnings: tuple[str, ...] = ()

    def to_report(self) -> dict:
        beam = self.beam
        return {
            "sigma_m": beam.beam_width,
            "r_m": beam.beam_separation,
            "r_over_sigma": beam.r_over_sigma,
            "d": self.interaction.d,
            "delta_r_m": self.interaction.delta_r,
            "lambda_m": beam.wavelength,
            "ell_m": beam.path_length,
            "theta_i_rad": self.interaction.theta_i,
            "potential_time_js": self.interaction.potential_time,
            "deflection_angle_rad": deflection_angle(self.interaction.delta_r, beam.path_length),
            "geometric_phase_rad": geometric_phase(beam.beam_width, beam.beam_width, self.interaction.d),
            "kinetic_energy_ev": self.kinetic_energy_ev,
            "relativistic_deviation": self.relativistic_deviation,
            "min_wavelength_spread": min_wavelength_spread(beam.path_length, beam.wavelength),
            "warnings": list(self.warnings),
        }


def electron_design_point(
    r_over_sigma: float = DISTINGUISHABLE_RATIO,
    d_max: float = 0.005,
    constants: PhysicalConstants = CODATA,
    kinetic_energy_ev: float = DEFAULT_KINETIC_ENERGY_EV,
) -> DesignPoint:
    """Beam width, separation, wavelength and path length for a target ``d_max``.

    The wavelength starts from the electron energy and is shortened (or
    lengthened) only as far as the path-length bounds ``ell >= 100 sigma``
    and ``ell <= 1 m`` require.
    """
    if not r_over_sigma >= 1:
        msg = f"r/sigma must be at least 1, got {r_over_sigma}"
        logger.error(msg)
        raise InvalidInputError(msg)
    _positive(d_max=d_max, kinetic_energy_ev=kinetic_energy_ev)

    warnings: list[str] = []
    sigma = 2 * constants.bohr_radius * d_max * r_over_sigma**2
    r = r_over_sigma * sigma

    lam = electron_wavelength(kinetic_energy_ev, constants)
    ell = 2 * math.pi * sigma**2 / lam
    if ell < MIN_ELL_OVER_SIGMA * sigma:
        lam = 2 * math.pi * sigma / MIN_ELL_OVER_SIGMA
        warnings.append(
            f"wavelength at {kinetic_energy_ev:g} eV gives ell < {MIN_ELL_OVER_SIGMA:g} sigma; "
            f"shortened to {lam:.3g} m"
        )
    elif ell > MAX_PATH_LENGTH:
        lam = 2 * math.pi * sigma**2 / MAX_PATH_LENGTH
        warnings.append(f"path length above {MAX_PATH_LENGTH:g} m; wavelength lengthened to {lam:.3g} m")
    ell = 2 * math.pi * sigma**2 / lam

    if lam < MIN_WAVELENGTH or ell > MAX_PATH_LENGTH or ell < MIN_ELL_OVER_SIGMA * sigma * (1 - 1e-12):
        msg = f"no wavelength >= {MIN_WAVELENGTH:g} m and path length <= {MAX_PATH_LENGTH:g} m fit {sigma = :.3g} m"
        logger.error(msg)
        raise InfeasibleDesignError(msg)

    beam = BeamParameters(path_length=ell, wavelength=lam, beam_width=sigma, beam_separation=r)
    interaction = InteractionPhysics.from_strength(d_max, beam, constants)
    if interaction.theta_i > 2 * math.pi:
        warnings.append(f"interaction phase (r/sigma)*d = {interaction.theta_i:.3g} rad exceeds 2*pi")
    if r_over_sigma < DISTINGUISHABLE_RATIO:
        warnings.append(
            f"r/sigma = {r_over_sigma:g} is below {DISTINGUISHABLE_RATIO:g}; beams may not be distinguishable"
        )
    if interaction.delta_r < CHALLENGING_DELTA_R:
        warnings.append(
            f"deflection {interaction.delta_r:.3g} m is below {CHALLENGING_DELTA_R:g} m: extremely challenging to measure"
        )

    energy = electron_kinetic_energy(lam, constants)
    deviation = nonrelativistic_wavelength(energy, constants) / lam - 1
    for warning in warnings:
        logger.warning(warning)
    logger.info(f"design point {sigma = :.4g} m {lam = :.4g} m {ell = :.4g} m")
    return DesignPoint(
        beam=beam,
        interaction=interaction,
        kinetic_energy_ev=energy,
        relativistic_deviation=deviation,
        warnings=tuple(warnings),
    )
