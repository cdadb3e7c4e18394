import numpy as np
import pytest

from mzi_pigeonhole import HALF_PI, DensityGrid, SweepCurve, expand_postselected, sweep
from mzi_pigeonhole._formats import (
    branch_notes,
    branches_to_json,
    branches_to_text,
    density_gnuplot,
    density_to_csv,
    density_to_pgm,
    sweep_gnuplot,
    sweep_to_csv,
    sweep_to_json,
)


@pytest.fixture
def small_grid():
    return DensityGrid(
        xs=np.array([-1.0, 0.0, 1.0]),
        ys=np.array([0.0, 2.0]),
        values=np.array([[0.0, 0.5, 0.25], [1.0, 0.0, 0.0]]),
        cell_area=1.0,
    )


@pytest.fixture
def small_curve():
    return SweepCurve(
        ds=np.array([0.0, 0.5]),
        means=np.array([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.25], [0.1, -0.5]]]),
        particles=(0, 2),
        pattern="ABB",
        chi=HALF_PI,
        k=5.0,
        phase_model="full",
    )


def test_density_csv_runs_x_fastest(small_grid):
    lines = density_to_csv(small_grid).splitlines()
    assert lines[0] == "x,y,p"
    assert lines[1:4] == ["-1,0,0", "0,0,0.5", "1,0,0.25"]
    assert lines[4] == "-1,2,1"
    assert len(lines) == 1 + 6


def test_density_pgm_puts_the_largest_y_on_top(small_grid):
    data = density_to_pgm(small_grid)
    header = b"P5\n3 2\n255\n"
    assert data.startswith(header)
    assert list(data[len(header) :]) == [255, 0, 0, 0, 128, 64]


def test_empty_density_pgm_is_black():
    grid = DensityGrid(xs=np.zeros(2), ys=np.zeros(1), values=np.zeros((1, 2)), cell_area=1.0)
    assert density_to_pgm(grid).endswith(b"\x00\x00")


def test_density_gnuplot_reads_the_csv():
    script = density_gnuplot("density.csv", "particle 1")
    assert "plot 'density.csv' skip 1 using 1:2:3 with image" in script
    assert 'set title "particle 1"' in script


def test_sweep_csv_labels_particles_from_one(small_curve):
    lines = sweep_to_csv(small_curve).splitlines()
    assert lines == ["d,x1,y1,x3,y3", "0,0,0,0,0", "0.5,0,0.25,0.10000000000000001,-0.5"]


def test_sweep_json_records_the_configuration(small_curve):
    payload = sweep_to_json(small_curve)
    assert payload["d"] == [0.0, 0.5]
    assert payload["particles"]["3"] == {"x": [0.0, 0.1], "y": [0.0, -0.5]}
    assert payload["config"] == {
        "pattern": "ABB",
        "chi": HALF_PI,
        "k": 5.0,
        "phase_model": "geometric_plus_interaction",
        "ensemble_spread": False,
        "coherent": True,
    }


@pytest.mark.parametrize(
    ("incoherent_name", "expected_dashed"),
    [pytest.param("sweep_incoherent.csv", 4, id="with baseline"), pytest.param(None, 0, id="alone")],
)
def test_sweep_gnuplot_draws_main_panel_and_inset(small_curve, incoherent_name, expected_dashed):
    script = sweep_gnuplot("sweep.csv", incoherent_name, small_curve)
    assert script.count("plot ") == 2
    assert "set xrange [0:0.2]" in script
    assert "using 1:5 with lines lw 2 title '<y3>'" in script
    assert script.count("dt 2") == expected_dashed


def test_sweep_formats_from_a_computed_curve():
    curve = sweep("AA", ds=[0.0, 1.0])
    assert sweep_to_csv(curve).splitlines()[0] == "d,x1,y1,x2,y2"
    assert sorted(sweep_to_json(curve)["particles"]) == ["1", "2"]


def test_branches_text_lists_every_arm_assignment():
    text = branches_to_text(expand_postselected(3, "AAA", HALF_PI))
    lines = text.splitlines()
    assert lines[0].startswith("pattern AAA  n=3")
    assert lines[1] == "{123}   1-1i"
    branch_lines = lines[lines.index("branches") + 1 :]
    assert len(branch_lines) == 8
    assert all(line.rstrip().endswith("php") for line in branch_lines)
    assert "note:" not in text


def test_branches_json_marks_cancelled_groups():
    payload = branches_to_json(expand_postselected(2, "AA", HALF_PI))
    groups = {g["structure"]: g["coefficient"] for g in payload["groups"]}
    assert groups["{12}"] == {"re": 0.0, "im": 0.0, "text": "0"}
    assert groups["{1|2}"]["im"] == 2.0
    assert payload["notes"] == ["group {12} cancels exactly"]
    assert len(payload["branches"]) == 4


def test_branch_notes_mention_shared_detectors():
    notes = branch_notes(expand_postselected(3, "AAB", HALF_PI))
    assert any(note.startswith("particles 1,2 share detector A") for note in notes)


@pytest.mark.parametrize(
    ("pattern", "expected_note"),
    [
        pytest.param("ABB", True, id="split pattern"),
        pytest.param("AAA", False, id="uniform pattern"),
        pytest.param("AAB", False, id="no published table"),
    ],
)
def test_sign_table_note(pattern, expected_note):
    notes = branch_notes(expand_postselected(3, pattern, HALF_PI))
    assert any(note.startswith("sign table over {123}, {12|3}, {13|2}, {23|1}") for note in notes) is expected_note
