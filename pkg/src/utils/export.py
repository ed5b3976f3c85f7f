import csv
import logging
from pathlib import Path

import numpy as np

from core.mesh import Mesh

logger = logging.getLogger("caving.export")

VTK_TRIANGLE = 5
HISTORY_COLUMNS = ("step", "outer_iteration", "error", "blend_count", "objective", "elapsed_seconds")
STEP_COLUMNS = (
    "step", "max_alpha", "outer_iterations", "blend_count", "converged", "damage_failures", "kkt_violations",
    "wall_seconds",
)


def _num(value) -> str:
    # shortest round-trip text, so files re-parse to the exact values
    return repr(float(value))


def export_vtk(mesh: Mesh, state, path) -> Path:
    """Legacy ASCII unstructured grid with point data ``alpha`` and ``displacement``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    alpha = np.asarray(state.alpha, dtype=float).ravel()
    u = np.asarray(state.u, dtype=float).reshape(-1, 2)
    if alpha.size != mesh.n_nodes or len(u) != mesh.n_nodes:
        raise ValueError(f"state does not match the mesh ({mesh.n_nodes} nodes)")

    lines = [
        "# vtk DataFile Version 2.0",
        f"damage state step {state.step}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    lines += [f"{_num(x)} {_num(y)} 0.0" for x, y in mesh.nodes]
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines += [str(VTK_TRIANGLE)] * mesh.n_triangles
    lines += [
        f"POINT_DATA {mesh.n_nodes}",
        "SCALARS alpha double 1",
        "LOOKUP_TABLE default",
    ]
    lines += [_num(a) for a in alpha]
    lines.append("VECTORS displacement double")
    lines += [f"{_num(ux)} {_num(uy)} 0.0" for ux, uy in u]

    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def export_history(history, path, timing: bool = True) -> Path:
    """One CSV row per outer iteration; ``timing=False`` writes 0.0 elapsed times."""
    if len(history) == 0:
        raise ValueError("cannot export an empty history")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for record in history:
            for i, (err, blends, objective, elapsed) in enumerate(
                zip(record.errors, record.blends, record.objectives, record.elapsed), start=1
            ):
                writer.writerow([record.step, i, _num(err), blends, _num(objective), _num(elapsed if timing else 0.0)])
    return path


def read_history(path) -> list[dict]:
    with Path(path).open(newline="", encoding="ascii") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "step": int(row["step"]),
            "outer_iteration": int(row["outer_iteration"]),
            "error": float(row["error"]),
            "blend_count": int(row["blend_count"]),
            "objective": float(row["objective"]),
            "elapsed_seconds": float(row["elapsed_seconds"]),
        }
        for row in rows
    ]


def export_steps(history, path, timing: bool = True) -> Path:
    """One CSV row per load step: damage peak, iteration counts and failure flags."""
    if len(history) == 0:
        raise ValueError("cannot export an empty history")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STEP_COLUMNS)
        for record in history:
            writer.writerow([
                record.step,
                _num(record.max_alpha),
                record.outer_iterations,
                record.total_blends,
                int(record.converged),
                record.damage_failures,
                record.kkt_violations,
                _num(record.wall_time if timing else 0.0),
            ])
    return path


def read_steps(path) -> list[dict]:
    with Path(path).open(newline="", encoding="ascii") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "step": int(row["step"]),
            "max_alpha": float(row["max_alpha"]),
            "outer_iterations": int(row["outer_iterations"]),
            "blend_count": int(row["blend_count"]),
            "converged": row["converged"] == "1",
            "damage_failures": int(row["damage_failures"]),
            "kkt_violations": int(row["kkt_violations"]),
            "wall_seconds": float(row["wall_seconds"]),
        }
        for row in rows
    ]


def export_sweep(curves: dict[float, list[float]], path) -> Path:
    """Max-alpha curves of a w11 sweep, one column per value."""
    if not curves:
        raise ValueError("cannot export an empty sweep")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = list(curves)
    steps = max(len(c) for c in curves.values())
    with path.open("w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step"] + [f"w11={_num(w)}" for w in values])
        for i in range(steps):
            writer.writerow([i] + [_num(curves[w][i]) if i < len(curves[w]) else "" for w in values])
    return path
