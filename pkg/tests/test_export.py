import numpy as np
import pytest

from core.mesh import BoundaryTag, Mesh
from core.solver import ErrorHistory, State, StepRecord
from utils.export import (
    HISTORY_COLUMNS,
    STEP_COLUMNS,
    export_history,
    export_steps,
    export_sweep,
    export_vtk,
    read_history,
    read_steps,
)


@pytest.fixture
def triangle():
    return Mesh(
        nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        facets=np.array([[0, 1], [1, 2], [2, 0]]),
        facet_tags=np.array([BoundaryTag.DOWN, BoundaryTag.CAV, BoundaryTag.LAT]),
        h_coarse=1.0,
        h_fine=1.0,
    )


@pytest.fixture
def triangle_state(triangle):
    u = np.array([[0.0, 0.0], [1e-3, -2e-4], [0.1 / 3.0, 5e-7]])
    alpha = np.array([0.0, 0.25, 1.0 / 3.0])
    return State(u=u, alpha=alpha, lower=np.zeros(3), step=7, mesh=triangle)


def _section(lines, header, count):
    start = next(i for i, line in enumerate(lines) if line.startswith(header)) + 1
    return lines[start:start + count]


def test_vtk_file_parses_back(tmp_path, triangle, triangle_state):
    path = export_vtk(triangle, triangle_state, tmp_path / "state.vtk")
    lines = path.read_text(encoding="ascii").splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert "DATASET UNSTRUCTURED_GRID" in lines
    points = np.array([[float(v) for v in line.split()] for line in _section(lines, "POINTS 3", 3)])
    np.testing.assert_array_equal(points[:, :2], triangle.nodes)
    assert _section(lines, "CELLS 1 4", 1) == ["3 0 1 2"]
    assert _section(lines, "CELL_TYPES 1", 1) == ["5"]
    alpha = np.array([float(v) for v in _section(lines, "LOOKUP_TABLE default", 3)])
    np.testing.assert_array_equal(alpha, triangle_state.alpha)
    u = np.array([[float(v) for v in line.split()] for line in _section(lines, "VECTORS displacement", 3)])
    np.testing.assert_array_equal(u[:, :2], triangle_state.u)
    np.testing.assert_array_equal(u[:, 2], 0.0)


def test_vtk_creates_directories_and_is_deterministic(tmp_path, triangle, triangle_state):
    first = export_vtk(triangle, triangle_state, tmp_path / "a" / "b" / "state.vtk")
    second = export_vtk(triangle, triangle_state, tmp_path / "again.vtk")
    assert first.read_bytes() == second.read_bytes()


def test_vtk_rejects_mismatched_state(tmp_path, triangle, triangle_state):
    triangle_state.alpha = np.zeros(4)
    with pytest.raises(ValueError):
        export_vtk(triangle, triangle_state, tmp_path / "bad.vtk")


def _history():
    first = StepRecord(step=0, errors=[0.0], blends=[0], objectives=[0.0], elapsed=[0.01], converged=True)
    second = StepRecord(step=1, errors=[0.3, 1.0 / 3.0, 2e-5], blends=[0, 2, 0],
                        objectives=[12.5, 11.0, 10.999999999999], elapsed=[0.1, 0.2, 0.3], converged=True)
    return ErrorHistory([first, second])


def test_history_header_and_rows(tmp_path):
    path = export_history(_history(), tmp_path / "history.csv")
    lines = path.read_text(encoding="ascii").splitlines()
    assert lines[0] == ",".join(HISTORY_COLUMNS)
    assert len(lines) == 1 + 4


def test_history_round_trip_is_exact(tmp_path):
    rows = read_history(export_history(_history(), tmp_path / "history.csv"))
    assert [(r["step"], r["outer_iteration"]) for r in rows] == [(0, 1), (1, 1), (1, 2), (1, 3)]
    assert [r["error"] for r in rows] == [0.0, 0.3, 1.0 / 3.0, 2e-5]
    assert [r["blend_count"] for r in rows] == [0, 0, 2, 0]
    assert rows[-1]["objective"] == 10.999999999999
    assert rows[-1]["elapsed_seconds"] == 0.3


def test_history_without_timing(tmp_path):
    rows = read_history(export_history(_history(), tmp_path / "history.csv", timing=False))
    assert all(r["elapsed_seconds"] == 0.0 for r in rows)


def test_single_step_history(tmp_path):
    history = ErrorHistory([StepRecord(step=0, errors=[0.0], blends=[0], objectives=[1.0], elapsed=[0.0])])
    lines = export_history(history, tmp_path / "h.csv").read_text(encoding="ascii").splitlines()
    assert lines == [",".join(HISTORY_COLUMNS), "0,1,0.0,0,1.0,0.0"]


def test_empty_history_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        export_history(ErrorHistory(), tmp_path / "history.csv")


def test_steps_summary(tmp_path):
    history = _history()
    history.records[1].max_alpha = 0.75
    history.records[1].damage_failures = 1
    history.records[1].converged = False
    path = export_steps(history, tmp_path / "steps.csv")
    assert path.read_text(encoding="ascii").splitlines()[0] == ",".join(STEP_COLUMNS)
    rows = read_steps(path)
    assert [r["outer_iterations"] for r in rows] == [1, 3]
    assert [r["blend_count"] for r in rows] == [0, 2]
    assert [r["max_alpha"] for r in rows] == [0.0, 0.75]
    assert [r["converged"] for r in rows] == [True, False]
    assert [r["damage_failures"] for r in rows] == [0, 1]
    assert [r["wall_seconds"] for r in rows] == [0.01, 0.3]


def test_steps_summary_without_timing(tmp_path):
    rows = read_steps(export_steps(_history(), tmp_path / "steps.csv", timing=False))
    assert all(r["wall_seconds"] == 0.0 for r in rows)


def test_sweep_columns_follow_the_values(tmp_path):
    path = export_sweep({100.0: [0.1, 0.5], 1000.0: [0.0]}, tmp_path / "sweep.csv")
    assert path.read_text(encoding="ascii").splitlines() == [
        "step,w11=100.0,w11=1000.0",
        "0,0.1,0.0",
        "1,0.5,",
    ]
    with pytest.raises(ValueError):
        export_sweep({}, tmp_path / "empty.csv")
