"""``mzi-pigeonhole`` command line: figure data, feasibility reports and verification."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import attrs
import numpy as np
from attrs.validators import ge, in_, instance_of, optional

from mzi_pigeonhole._adapters import IoAdapter
from mzi_pigeonhole._branches import HALF_PI, DetectorPattern, expand_postselected
from mzi_pigeonhole._container import Domain, get_real_adapter
from mzi_pigeonhole._density import GridSpec, build_terms, incoherent_density, probability_density
from mzi_pigeonhole._errors import InfeasibleDesignError, InvalidInputError
from mzi_pigeonhole._feasibility import DEFAULT_KINETIC_ENERGY_EV, electron_design_point
from mzi_pigeonhole._formats import (
    branches_to_json,
    branches_to_text,
    density_gnuplot,
    density_to_csv,
    density_to_pgm,
    sweep_gnuplot,
    sweep_to_csv,
    sweep_to_json,
)
from mzi_pigeonhole._modes import InteractionConfig, PhaseModel, to_phase_model
from mzi_pigeonhole._observables import MomentMethod, SweepCurve, default_d_grid, sweep
from mzi_pigeonhole._parallel import thread_count
from mzi_pigeonhole._registries import OutputFormat
from mzi_pigeonhole._verify import load_tolerances, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_INFEASIBLE = 3

SUFFIXES = {
    OutputFormat.CSV: ".csv",
    OutputFormat.JSON: ".json",
    OutputFormat.PGM: ".pgm",
    OutputFormat.GNUPLOT: ".gp",
    OutputFormat.TEXT: ".txt",
}
DENSITY_FORMATS = ("csv", "pgm", "gnuplot")
SWEEP_FORMATS = ("csv", "json", "gnuplot")
PHASE_CHOICES = ("none", "geometric", "full")


def _formats(values: Sequence[str] | None) -> tuple[OutputFormat, ...]:
    return tuple(dict.fromkeys(OutputFormat(v) for v in values or ()))


@attrs.frozen(kw_only=True)
class RunConfig:
    """Everything a subcommand needs, resolved from flags and the environment."""

    subcommand: str = attrs.field(validator=in_(["branches", "density", "sweep", "feasibility", "verify"]))
    pattern: DetectorPattern = attrs.field(default="AAA", converter=DetectorPattern)
    chi: float = attrs.field(default=HALF_PI, converter=float)
    d: float = attrs.field(default=0.25, converter=float, validator=ge(0.0))
    ds: np.ndarray | None = attrs.field(default=None, eq=False)
    k: float = attrs.field(default=5.0, converter=float, validator=ge(0.0))
    phase_model: PhaseModel = attrs.field(default=PhaseModel.NONE, converter=to_phase_model)
    ensemble_spread: bool = False
    particle: int = attrs.field(default=0, validator=[instance_of(int), ge(0)])
    particles: tuple[int, ...] | None = None
    incoherent: bool = False
    method: MomentMethod = attrs.field(default=MomentMethod.ANALYTIC, converter=MomentMethod)
    points: int | None = attrs.field(default=None, validator=optional(instance_of(int)))
    half_width: float | None = None
    out: Path | None = attrs.field(default=None, converter=attrs.converters.optional(Path))
    formats: tuple[OutputFormat, ...] = attrs.field(default=(), converter=_formats)
    threads: int = attrs.field(default=1, validator=[instance_of(int), ge(1)])
    r_over_sigma: float = 5.0
    d_max: float = 0.005
    kinetic_energy_ev: float = DEFAULT_KINETIC_ENERGY_EV
    quick: bool = False
    tolerances: Path | None = attrs.field(default=None, converter=attrs.converters.optional(Path))

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        """Map parsed flags onto a config; 1-based particle labels become 0-based."""
        values = {
            name: value
            for name, value in vars(args).items()
            if name in attrs.fields_dict(cls) and value is not None
        }
        if "particle" in values:
            values["particle"] = values["particle"] - 1
        if "particles" in values:
            values["particles"] = tuple(p - 1 for p in values["particles"])
        if args.subcommand == "sweep":
            values["ds"] = _sweep_range(args, values.get("phase_model", PhaseModel.NONE))
        values["threads"] = thread_count(args.threads)
        return cls(**values)

    def interaction(self, d: float | None = None) -> InteractionConfig:
        return InteractionConfig(
            d=self.d if d is None else d,
            k=self.k,
            phase_model=self.phase_model,
            ensemble_spread=self.ensemble_spread,
        )

    def path_for(self, fmt: OutputFormat, default_stem: str, suffix: str = "") -> Path:
        base = self.out or Path(default_stem)
        return base.with_name(f"{base.with_suffix('').name}{suffix}").with_suffix(SUFFIXES[fmt])


def _sweep_range(args: argparse.Namespace, phase_model: PhaseModel | str) -> np.ndarray | None:
    """Explicit d-grid from the range flags; unset flags fall back to the default grid."""
    if args.d_min is None and args.d_range_max is None and args.d_step is None:
        return None
    default = default_d_grid(phase_model)
    d_min = 0.0 if args.d_min is None else args.d_min
    d_max = float(default[-1]) if args.d_range_max is None else args.d_range_max
    d_step = float(default[1] - default[0]) if args.d_step is None else args.d_step
    if not d_step > 0 or d_max < d_min:
        msg = f"d-range needs d_step > 0 and d_max >= d_min, got {d_min = } {d_max = } {d_step = }"
        logger.error(msg)
        raise InvalidInputError(msg)
    count = round((d_max - d_min) / d_step) + 1
    return np.linspace(d_min, d_min + (count - 1) * d_step, count)


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_branches(config: RunConfig, adapter: IoAdapter) -> int:
    state = expand_postselected(config.pattern.n, config.pattern, config.chi)
    fmt = config.formats[0] if config.formats else OutputFormat.TEXT
    if fmt is OutputFormat.JSON:
        payload = branches_to_json(state)
        text = json.dumps(payload, sort_keys=True, indent=2)
    else:
        payload = text = branches_to_text(state)

    if config.out is None:
        _emit(text)
    else:
        adapter.write(payload, config.out, fmt)
    return EXIT_OK


def _density_grid(config: RunConfig, centers: np.ndarray) -> GridSpec:
    points = config.points or GridSpec().points
    if config.half_width is None:
        return GridSpec.covering(centers, points=points)
    half = config.half_width
    return GridSpec(x_range=(-half, half), y_range=(-half, half), points=points)


def cmd_density(config: RunConfig, adapter: IoAdapter) -> int:
    state = expand_postselected(config.pattern.n, config.pattern, config.chi)
    terms = build_terms(state, config.interaction(), config.particle)
    grid_spec = _density_grid(config, terms.centers)
    evaluate = incoherent_density if config.incoherent else probability_density
    grid = evaluate(terms, grid_spec, config.threads)

    formats = config.formats or (OutputFormat.CSV,)
    if OutputFormat.GNUPLOT in formats and OutputFormat.CSV not in formats:
        formats = (OutputFormat.CSV, *formats)
    stem = "density_incoherent" if config.incoherent else "density"
    csv_path = config.path_for(OutputFormat.CSV, stem)
    for fmt in formats:
        path = config.path_for(fmt, stem)
        if fmt is OutputFormat.CSV:
            adapter.write(density_to_csv(grid), path, fmt)
        elif fmt is OutputFormat.PGM:
            adapter.write(density_to_pgm(grid), path, fmt)
        else:
            kind = "incoherent" if config.incoherent else "coherent"
            title = (
                f"particle {config.particle + 1}, {config.pattern}, d={config.d:g}, "
                f"phases={config.phase_model.value}, {kind}"
            )
            adapter.write(density_gnuplot(csv_path.name, title), path, fmt)
    logger.info(f"density integral {grid.integral():.12g}, captured mass {grid.captured_mass:.12g}")
    return EXIT_OK


def _sweep_pair(config: RunConfig) -> tuple[SweepCurve, SweepCurve]:
    def run(*, coherent: bool) -> SweepCurve:
        return sweep(
            config.pattern,
            config.chi,
            config.k,
            config.phase_model,
            config.ds,
            ensemble_spread=config.ensemble_spread,
            particles=config.particles,
            coherent=coherent,
            method=config.method,
            threads=config.threads,
        )

    return run(coherent=True), run(coherent=False)


def cmd_sweep(config: RunConfig, adapter: IoAdapter) -> int:
    curve, baseline = _sweep_pair(config)
    formats = config.formats or (OutputFormat.CSV,)
    if OutputFormat.GNUPLOT in formats and OutputFormat.CSV not in formats:
        formats = (OutputFormat.CSV, *formats)

    for fmt in formats:
        path = config.path_for(fmt, "sweep")
        incoherent_path = config.path_for(fmt, "sweep", "_incoherent")
        if fmt is OutputFormat.CSV:
            adapter.write(sweep_to_csv(curve), path, fmt)
            adapter.write(sweep_to_csv(baseline), incoherent_path, fmt)
        elif fmt is OutputFormat.JSON:
            adapter.write(sweep_to_json(curve), path, fmt)
            adapter.write(sweep_to_json(baseline), incoherent_path, fmt)
        else:
            script = sweep_gnuplot(
                config.path_for(OutputFormat.CSV, "sweep").name,
                config.path_for(OutputFormat.CSV, "sweep", "_incoherent").name,
                curve,
            )
            adapter.write(script, path, fmt)
    return EXIT_OK


def cmd_feasibility(config: RunConfig, adapter: IoAdapter) -> int:
    point = electron_design_point(
        config.r_over_sigma, config.d_max, kinetic_energy_ev=config.kinetic_energy_ev
    )
    report = point.to_report()
    if config.out is None:
        _emit(json.dumps(report, sort_keys=True, indent=2))
    else:
        adapter.write(report, config.out, OutputFormat.JSON)
    return EXIT_OK


def cmd_verify(config: RunConfig, adapter: IoAdapter) -> int:
    tolerances = load_tolerances(adapter, config.tolerances)
    report = run_checks(tolerances, quick=config.quick)
    if config.out is None:
        _emit(json.dumps(report, sort_keys=True, indent=2))
    else:
        adapter.write(report, config.out, OutputFormat.JSON)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


COMMANDS = {
    "branches": (cmd_branches, Domain.BRANCHES),
    "density": (cmd_density, Domain.DENSITY),
    "sweep": (cmd_sweep, Domain.SWEEP),
    "feasibility": (cmd_feasibility, Domain.FEASIBILITY),
    "verify": (cmd_verify, Domain.VERIFY),
}


def _add_physics(parser: argparse.ArgumentParser, *, d_flag: bool) -> None:
    parser.add_argument("--pattern", help="detector outcome per particle, e.g. AAA or ABB")
    parser.add_argument("--chi", type=float, help="phase shift in the R arm (default pi/2)")
    if d_flag:
        parser.add_argument("--d", type=float, help="interaction strength in beam widths")
    parser.add_argument("--k", type=float, help="beam separation over beam width (default 5)")
    parser.add_argument("--phases", dest="phase_model", choices=PHASE_CHOICES, help="phase model")
    parser.add_argument(
        "--ensemble-spread",
        action="store_true",
        default=None,
        help="average the interaction phase over the beam-separation spread",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mzi-pigeonhole", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--threads", type=int, help="worker threads (default $MZI_PIGEONHOLE_THREADS or 1)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    branches = sub.add_parser("branches", help="post-selected companion groups and coefficients")
    branches.add_argument("--pattern", default="AAA")
    branches.add_argument("--n", type=int, help="particle count, must match the pattern")
    branches.add_argument("--chi", type=float)
    branches.add_argument("--format", dest="formats", action="append", choices=("text", "json"))
    branches.add_argument("--out", help="write here instead of stdout")

    density = sub.add_parser("density", help="single-particle probability density on a grid")
    _add_physics(density, d_flag=True)
    density.add_argument("--particle", type=int, help="1-based particle label (default 1)")
    density.add_argument("--incoherent", action="store_true", default=None, help="drop cross terms")
    density.add_argument("--points", type=int, help="grid points per axis (default 257)")
    density.add_argument("--half-width", type=float, help="fixed half-width in sigma instead of covering")
    density.add_argument("--format", dest="formats", action="append", choices=DENSITY_FORMATS)
    density.add_argument("--out", help="output path; other formats swap the suffix")

    sweep_parser = sub.add_parser("sweep", help="<x>, <y> against interaction strength")
    _add_physics(sweep_parser, d_flag=False)
    sweep_parser.add_argument("--d-min", type=float, help="default 0")
    sweep_parser.add_argument("--d-max", dest="d_range_max", type=float, help="default 3, or 1.5 with interaction phase")
    sweep_parser.add_argument("--d-step", type=float, help="default: 0.01, or 0.002 with interaction phase")
    sweep_parser.add_argument("--particles", type=int, nargs="+", help="1-based particle labels")
    sweep_parser.add_argument("--method", choices=[m.value for m in MomentMethod])
    sweep_parser.add_argument("--format", dest="formats", action="append", choices=SWEEP_FORMATS)
    sweep_parser.add_argument("--out", help="coherent CSV path; the baseline gets an _incoherent suffix")

    feasibility = sub.add_parser("feasibility", help="electron design point for a target d")
    feasibility.add_argument("--r-over-sigma", type=float)
    feasibility.add_argument("--d-max", type=float)
    feasibility.add_argument("--kinetic-energy-ev", type=float)
    feasibility.add_argument("--out", help="write the JSON report here instead of stdout")

    verify = sub.add_parser("verify", help="oracle and invariant checks")
    verify.add_argument("--quick", action="store_true", default=None, help="branch and overlap checks only")
    verify.add_argument("--tolerances", help="JSON file overriding named tolerances")
    verify.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None, adapter: IoAdapter | None = None) -> int:
    """Run one subcommand and return its exit code.

    ``adapter`` replaces the subcommand's real adapter, e.g. a fake one in tests.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INVALID_INPUT
    _configure_logging(args.verbose)

    try:
        config = RunConfig.from_args(args)
        if args.subcommand == "branches" and args.n is not None and args.n != config.pattern.n:
            msg = f"--n {args.n} does not match pattern {config.pattern} of {config.pattern.n} particles"
            logger.error(msg)
            raise InvalidInputError(msg)
        command, domain = COMMANDS[config.subcommand]
        return command(config, adapter or get_real_adapter(domain))
    except InfeasibleDesignError as e:
        sys.stderr.write(f"infeasible design: {e}\n")
        return EXIT_INFEASIBLE
    except (ValueError, NotImplementedError) as e:
        sys.stderr.write(f"invalid input: {e}\n")
        return EXIT_INVALID_INPUT
