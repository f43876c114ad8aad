import json
import shutil

import numpy as np
import polars as pl
import pytest

from conftest import FIXTURES, random_curve, random_rotation_curve, random_sphere_curve
from data.cast_types import curve_document
from data.curve_files import parse_curve_file, write_curve_document
from elastica_app import main
from utils.formatting import format_distance
from utils.rotations import dist_lie
from utils.shapes import ShapeMatchOptions, dist_shape

SHORT = str(FIXTURES / "segment_short.json")
LONG = str(FIXTURES / "segment_long.json")


def write_curve(path, curve):
    path.write_bytes(write_curve_document(curve_document(curve)))
    return str(path)


@pytest.mark.parametrize("mode", ["param", "shape"])
def test_dist_between_segments(capsys, mode):
    assert main(["dist", SHORT, LONG, "--mode", mode]) == 0
    assert capsys.readouterr().out == (FIXTURES / "dist_segments.txt").read_text()


def test_dist_reads_csv(capsys):
    assert main(["dist", str(FIXTURES / "segment_short.csv"), LONG]) == 0
    assert capsys.readouterr().out == "1\n"


def test_dist_matches_library(tmp_path, capsys, rng):
    c0, c1 = random_curve(rng, n=16), random_curve(rng, n=16)
    a, b = write_curve(tmp_path / "a.json", c0), write_curve(tmp_path / "b.json", c1)
    assert main(["dist", a, b, "--mode", "shape", "--outer-iters", "2"]) == 0
    expected = dist_shape(c0, c1, ShapeMatchOptions(outer_iters=2)).distance
    assert capsys.readouterr().out == format_distance(expected) + "\n"


def test_geodesic_between_segments(tmp_path):
    output = tmp_path / "geodesic.json"
    assert main(["geodesic", SHORT, LONG, "--steps", "2", "-o", str(output)]) == 0
    assert output.read_bytes() == (FIXTURES / "geodesic_segments.json").read_bytes()


def test_geodesic_to_stdout(capsys):
    assert main(["geodesic", SHORT, LONG, "--steps", "4"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["times"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(payload["curves"]) == 5


def test_match_segments_to_file(tmp_path):
    output = tmp_path / "match.json"
    assert main(["match", SHORT, LONG, "-o", str(output)]) == 0
    assert output.read_bytes() == (FIXTURES / "match_segments.json").read_bytes()


def test_match_segments(capsys):
    assert main(["match", SHORT, LONG]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["distance"] == pytest.approx(1.0, abs=1e-12)
    assert payload["seed_shift"] == 0
    assert np.allclose(payload["rotation"], np.eye(2), atol=1e-12)
    gamma = np.array(payload["gamma"])
    assert gamma[0].tolist() == [0.0, 0.0]
    assert gamma[-1].tolist() == [1.0, 1.0]
    assert np.allclose(gamma[:, 0], gamma[:, 1], atol=1e-12)


def test_matrix_of_directory(tmp_path):
    shutil.copy(SHORT, tmp_path / "a.json")
    shutil.copy(LONG, tmp_path / "b.json")
    shutil.copy(FIXTURES / "segment_short.csv", tmp_path / "c.csv")
    (tmp_path / "notes.txt").write_text("not a curve")
    output = tmp_path / "matrix.csv"
    assert main(["matrix", str(tmp_path), "-o", str(output)]) == 0
    frame = pl.read_csv(output)
    assert frame.columns == ["curve", "a.json", "b.json", "c.csv"]
    assert frame["b.json"].to_list() == pytest.approx([1.0, 0.0, 1.0])
    assert frame["c.csv"].to_list() == pytest.approx([0.0, 1.0, 0.0])


def test_mean_of_segments(tmp_path):
    output = tmp_path / "mean.json"
    assert main(["mean", SHORT, LONG, "--no-rotation", "--no-reparam", "-o", str(output)]) == 0
    document = parse_curve_file(output.read_bytes())
    assert np.allclose(document.points[:, 0], [0.0, 0.5625, 1.125, 1.6875, 2.25])


def test_project_closed(tmp_path):
    t = np.linspace(0.0, 0.75, 33)
    arc = np.column_stack([np.cos(2.0 * np.pi * t), np.sin(2.0 * np.pi * t)])
    source = tmp_path / "arc.csv"
    source.write_text("\n".join(f"{float(x)!r},{float(y)!r}" for x, y in arc) + "\n")
    output = tmp_path / "closed.json"
    assert main(["project-closed", str(source), "-o", str(output)]) == 0
    document = parse_curve_file(output.read_bytes())
    assert document.closed
    assert np.linalg.norm(document.points[-1] - document.points[0]) < 1e-7


def test_project_closed_divergence_exit_code(tmp_path):
    t = np.linspace(0.0, 0.75, 33)
    source = tmp_path / "arc.csv"
    source.write_text("\n".join(f"{float(np.cos(6 * s))!r},{float(np.sin(6 * s))!r}" for s in t) + "\n")
    assert main(["project-closed", str(source), "--tol", "1e-300", "--max-iter", "1"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["dist", SHORT],
        ["dist", SHORT, LONG, "--mode", "warp"],
        ["dist", SHORT, LONG, "--dp-width", "0"],
        ["geodesic", SHORT, LONG, "--steps", "0"],
        ["dist", SHORT, LONG, "--ref-point", "1,1,1"],
    ],
)
def test_usage_errors_exit_with_one(argv):
    assert main(argv) == 1


def test_missing_file_exits_with_one(tmp_path, capsys):
    assert main(["dist", SHORT, str(tmp_path / "missing.json")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_space_mismatch_exits_with_one(tmp_path):
    sphere = tmp_path / "sphere.json"
    sphere.write_text('{"space": "s2", "dimension": 3, "points": [[1, 0, 0], [0, 1, 0]]}')
    assert main(["dist", SHORT, str(sphere)]) == 1


def test_resample_rejected_off_rd(tmp_path):
    sphere = tmp_path / "sphere.json"
    sphere.write_text('{"space": "s2", "dimension": 3, "points": [[1, 0, 0], [0, 1, 0]]}')
    assert main(["dist", str(sphere), str(sphere), "--resample", "8"]) == 1


def test_sample_count_mismatch_exits_with_two(tmp_path):
    other = tmp_path / "other.json"
    other.write_text('{"space": "rd", "dimension": 2, "points": [[0, 0], [1, 0], [2, 0]]}')
    assert main(["dist", SHORT, str(other)]) == 2


def test_resample_fixes_sample_count_mismatch(tmp_path, capsys):
    other = tmp_path / "other.json"
    other.write_text('{"space": "rd", "dimension": 2, "points": [[0, 0], [1, 0], [4, 0]]}')
    assert main(["dist", SHORT, str(other), "--resample", "4"]) == 0
    assert capsys.readouterr().out == "1\n"


def test_tsrv_has_no_geodesic(tmp_path):
    sphere = tmp_path / "sphere.json"
    sphere.write_text('{"space": "s2", "dimension": 3, "points": [[1, 0, 0], [0.8, 0.6, 0], [0.6, 0.8, 0]]}')
    assert main(["geodesic", str(sphere), str(sphere), "--space", "s2-tsrv"]) == 1


def test_sphere_self_distance(tmp_path, capsys):
    sphere = tmp_path / "sphere.json"
    sphere.write_text('{"space": "s2", "dimension": 3, "points": [[1, 0, 0], [0.8, 0.6, 0], [0.6, 0.8, 0]]}')
    assert main(["dist", str(sphere), str(sphere)]) == 0
    assert float(capsys.readouterr().out) == 0.0


def test_help_exits_with_zero(capsys):
    assert main(["--help"]) == 0
    assert "geodesic" in capsys.readouterr().out


def test_rotation_shape_distance_without_warps(tmp_path, capsys, rng):
    c0, c1 = random_rotation_curve(rng), random_rotation_curve(rng)
    a, b = write_curve(tmp_path / "a.json", c0), write_curve(tmp_path / "b.json", c1)
    assert main(["dist", a, b, "--mode", "shape", "--no-reparam"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(dist_lie(c0, c1), rel=1e-10)


def test_sphere_shape_distance_without_warps(tmp_path, capsys, rng):
    a = write_curve(tmp_path / "a.json", random_sphere_curve(rng))
    b = write_curve(tmp_path / "b.json", random_sphere_curve(rng))
    assert main(["dist", a, b, "--mode", "param"]) == 0
    homogeneous = capsys.readouterr().out
    assert main(["dist", a, b, "--mode", "shape", "--no-reparam"]) == 0
    assert capsys.readouterr().out == homogeneous


def test_failure_is_reported_once(tmp_path, capsys):
    assert main(["dist", SHORT, str(tmp_path / "missing.json")]) == 1
    assert capsys.readouterr().err.count("cannot read") == 1
