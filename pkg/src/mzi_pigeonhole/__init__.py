from mzi_pigeonhole._adapters import FakeAdapter, IoAdapter, RealAdapter
from mzi_pigeonhole._branches import (
    HALF_PI,
    Arm,
    ArmAssignment,
    CompanionStructure,
    Detector,
    DetectorPattern,
    PostSelectedState,
    branch_coefficient,
    enumerate_assignments,
    expand_postselected,
    predetection_coefficient,
    render_state,
    verify_classical_php,
)
from mzi_pigeonhole._cli import RunConfig, main
from mzi_pigeonhole._container import (
    Container,
    Domain,
    add_domain,
    get_fake_adapter,
    get_real_adapter,
    register_domain_read_fn,
    register_domain_write_fn,
)
from mzi_pigeonhole._density import (
    DensityGrid,
    DensityTerms,
    GridSpec,
    build_terms,
    closed_form_reference,
    density_at,
    incoherent_density,
    probability_density,
    total_norm,
)
from mzi_pigeonhole._errors import (
    InfeasibleDesignError,
    InvalidInputError,
    NumericalInvariantError,
    UnsupportedCaseError,
)
from mzi_pigeonhole._feasibility import (
    CODATA,
    BeamParameters,
    DesignPoint,
    InteractionPhysics,
    PhysicalConstants,
    electron_design_point,
    electron_kinetic_energy,
    electron_wavelength,
    min_wavelength_spread,
)
from mzi_pigeonhole._io_funcs import read_json, write_bytes, write_json, write_text  # noqa: F401
from mzi_pigeonhole._modes import (
    DeflectionGeometry,
    GaussianMode,
    InteractionConfig,
    PhaseModel,
    evaluate,
    mode_for,
    modes_for_structure,
    overlap,
)
from mzi_pigeonhole._observables import (
    MomentMethod,
    SweepCurve,
    analytic_moments,
    apparent_effect_window,
    expectation,
    incoherent_expectation,
    momentum_sum,
    slope_at_zero,
    slope_sign_changes,
    sweep,
)
from mzi_pigeonhole._quadrature import (
    QuadratureRule,
    QuadratureSpec,
    numeric_expectation,
    numeric_marginal_two_particle,
    numeric_overlap,
)
from mzi_pigeonhole._registries import OutputFormat, register_read_fn, register_write_fn
from mzi_pigeonhole._verify import load_tolerances, run_checks

__all__ = [
    "CODATA",
    "HALF_PI",
    "Arm",
    "ArmAssignment",
    "BeamParameters",
    "CompanionStructure",
    "Container",
    "DeflectionGeometry",
    "DensityGrid",
    "DensityTerms",
    "DesignPoint",
    "Detector",
    "DetectorPattern",
    "Domain",
    "FakeAdapter",
    "GaussianMode",
    "GridSpec",
    "InfeasibleDesignError",
    "InteractionConfig",
    "InteractionPhysics",
    "InvalidInputError",
    "IoAdapter",
    "MomentMethod",
    "NumericalInvariantError",
    "OutputFormat",
    "PhaseModel",
    "PhysicalConstants",
    "PostSelectedState",
    "QuadratureRule",
    "QuadratureSpec",
    "RealAdapter",
    "RunConfig",
    "SweepCurve",
    "UnsupportedCaseError",
    "add_domain",
    "analytic_moments",
    "apparent_effect_window",
    "branch_coefficient",
    "build_terms",
    "closed_form_reference",
    "density_at",
    "electron_design_point",
    "electron_kinetic_energy",
    "electron_wavelength",
    "enumerate_assignments",
    "evaluate",
    "expand_postselected",
    "expectation",
    "get_fake_adapter",
    "get_real_adapter",
    "incoherent_density",
    "incoherent_expectation",
    "load_tolerances",
    "main",
    "min_wavelength_spread",
    "mode_for",
    "modes_for_structure",
    "momentum_sum",
    "numeric_expectation",
    "numeric_marginal_two_particle",
    "numeric_overlap",
    "overlap",
    "predetection_coefficient",
    "probability_density",
    "register_domain_read_fn",
    "register_domain_write_fn",
    "register_read_fn",
    "register_write_fn",
    "render_state",
    "run_checks",
    "slope_at_zero",
    "slope_sign_changes",
    "sweep",
    "total_norm",
    "verify_classical_php",
]
