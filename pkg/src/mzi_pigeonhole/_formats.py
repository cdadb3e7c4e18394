"""Pure serialisers: every function returns ``str``, ``bytes`` or a JSON-ready ``dict``."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable

import numpy as np

from mzi_pigeonhole._branches import (
    PostSelectedState,
    branch_coefficient,
    enumerate_assignments,
    format_complex,
    render_state,
    verify_classical_php,
)
from mzi_pigeonhole._density import DensityGrid
from mzi_pigeonhole._observables import SweepCurve

PGM_MAX = 255
INSET_D_MAX = 0.2
# Sign tables printed in the literature that disagree with the expansion, keyed by pattern.
PUBLISHED_SIGN_TABLES = {"ABB": (1, 1, -1, 1)}


def _g(value: float) -> str:
    return f"{value + 0.0:.17g}"


def density_to_csv(grid: DensityGrid) -> str:
    """``x,y,p`` rows, x running fastest."""
    lines = ["x,y,p"]
    for y, row in zip(grid.ys, grid.values, strict=True):
        y_text = _g(y)
        lines.extend(f"{_g(x)},{y_text},{_g(p)}" for x, p in zip(grid.xs, row, strict=True))
    return "\n".join(lines) + "\n"


def density_to_pgm(grid: DensityGrid) -> bytes:
    """Binary 8-bit graymap scaled to the peak value, top row at the largest y."""
    peak = float(grid.values.max())
    scaled = grid.values / peak if peak > 0 else np.zeros_like(grid.values)
    pixels = np.rint(scaled[::-1] * PGM_MAX).astype(np.uint8)
    header = f"P5\n{grid.xs.size} {grid.ys.size}\n{PGM_MAX}\n".encode("ascii")
    return header + pixels.tobytes()


def density_gnuplot(csv_name: str, title: str) -> str:
    return "\n".join(
        [
            'set datafile separator ","',
            f'set title "{title}"',
            'set xlabel "x / sigma"',
            'set ylabel "y / sigma"',
            "set size ratio -1",
            "set palette grey negative",
            f"plot '{csv_name}' skip 1 using 1:2:3 with image notitle",
            "",
        ]
    )


def sweep_to_csv(curve: SweepCurve) -> str:
    header = ["d"]
    for p in curve.particles:
        header.extend([f"x{p + 1}", f"y{p + 1}"])
    lines = [",".join(header)]
    for d, means in zip(curve.ds, curve.means, strict=True):
        values = [_g(d)]
        for x, y in means:
            values.extend([_g(x), _g(y)])
        lines.append(",".join(values))
    return "\n".join(lines) + "\n"


def sweep_to_json(curve: SweepCurve) -> dict:
    return {
        "config": curve.snapshot(),
        "d": [float(d) for d in curve.ds],
        "particles": {
            str(p + 1): {"x": curve.x(p).tolist(), "y": curve.y(p).tolist()}
            for p in curve.particles
        },
    }


def sweep_gnuplot(
    csv_name: str,
    incoherent_csv_name: str | None,
    curve: SweepCurve,
    inset_d_max: float = INSET_D_MAX,
) -> str:
    """Main panel over the whole d-grid with a small-d inset, coherent curves solid."""

    def plots() -> str:
        parts = []
        for column, p in enumerate(curve.particles):
            y_col = 3 + 2 * column
            parts.append(f"'{csv_name}' every ::1 using 1:{y_col} with lines lw 2 title '<y{p + 1}>'")
            if incoherent_csv_name is not None:
                parts.append(
                    f"'{incoherent_csv_name}' every ::1 using 1:{y_col} with lines dt 2 "
                    f"title '<y{p + 1}> inc.'"
                )
        return ", \\\n     ".join(parts)

    title = f"{curve.pattern}  k={curve.k:g}  phases={curve.phase_model.value}"
    return "\n".join(
        [
            'set datafile separator ","',
            "set multiplot",
            f'set title "{title}"',
            'set xlabel "d"',
            'set ylabel "<y> / sigma"',
            "set key top left",
            f"plot {plots()}",
            "set origin 0.55, 0.12",
            "set size 0.4, 0.4",
            "unset title",
            "unset key",
            f"set xrange [0:{inset_d_max:g}]",
            f"plot {plots()}",
            "unset multiplot",
            "",
        ]
    )


def _coefficient_json(value: complex) -> dict:
    return {"re": value.real + 0.0, "im": value.imag + 0.0, "text": format_complex(value)}


def _signs(values: Iterable[float]) -> str:
    return "(" + ", ".join("+" if v > 0 else "-" for v in values) + ")"


def _sign_table_note(state: PostSelectedState, published: tuple[int, ...]) -> str:
    reference = next(c for c in state.coefficients.values() if c != 0)
    derived = [(c / reference).real for c in state.coefficients.values()]
    groups = ", ".join(map(str, state.groups))
    return (
        f"sign table over {groups}: derived {_signs(derived)}; the published table "
        f"{_signs(published)} is not symmetric under exchanging particles 2 and 3 and is not used"
    )


def branch_notes(state: PostSelectedState) -> list[str]:
    notes = [f"group {group} cancels exactly" for group in state.groups if state.coefficients[group] == 0]
    by_detector = defaultdict(list)
    for i, detector in enumerate(state.pattern.detectors):
        by_detector[detector].append(i + 1)
    published = PUBLISHED_SIGN_TABLES.get(str(state.pattern))
    if published is not None:
        notes.append(_sign_table_note(state, published))
    for detector, particles in sorted(by_detector.items(), key=lambda item: item[0].value):
        if 1 < len(particles) < state.n:
            labels = ",".join(map(str, particles))
            notes.append(
                f"particles {labels} share detector {detector.value}: relabelling them "
                "permutes groups without changing coefficients"
            )
    return notes


def branches_to_json(state: PostSelectedState) -> dict:
    return {
        "n": state.n,
        "pattern": str(state.pattern),
        "chi": state.chi,
        "groups": [
            {"structure": str(group), "coefficient": _coefficient_json(coefficient)}
            for group, coefficient in state.coefficients.items()
        ],
        "branches": [
            {
                "arms": str(assignment),
                "structure": str(assignment.structure()),
                "coefficient": _coefficient_json(
                    branch_coefficient(assignment, state.pattern, state.chi)
                ),
                "classical_php": verify_classical_php(assignment),
            }
            for assignment in enumerate_assignments(state.n)
        ],
        "notes": branch_notes(state),
    }


def branches_to_text(state: PostSelectedState) -> str:
    lines = [render_state(state).rstrip("\n"), "", "branches"]
    for assignment in enumerate_assignments(state.n):
        coefficient = branch_coefficient(assignment, state.pattern, state.chi)
        witness = "php" if verify_classical_php(assignment) else "no-php"
        lines.append(
            f"  {assignment}  {assignment.structure()!s:<{state.n + 3}}  "
            f"{format_complex(coefficient):<8}  {witness}"
        )
    notes = branch_notes(state)
    if notes:
        lines.extend(["", *(f"note: {note}" for note in notes)])
    return "\n".join(lines) + "\n"
