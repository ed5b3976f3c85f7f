import dataclasses

import numpy as np
import pytest

from config import GeometrySection, load_scenario
from core.material import DamageLaw
from core.mesh import BoundaryTag, Box, build_mesh
from core.solver import Algorithm, run_quasi_static
from errors import ScenarioError
from scenarios import ScenarioRegistry, default_registry
from scenarios.caving import CavingProgram
from scenarios.compression import CompressionProgram, distance_to_segment, localization_ratio, seed_band


def test_default_registry_kinds():
    assert default_registry().kinds == ("caving", "compression")


def test_unknown_kind():
    scenario = load_scenario("trivial")
    scenario.scenario.kind = "drilling"
    with pytest.raises(ScenarioError, match="unknown scenario kind"):
        default_registry().build(scenario)


def test_duplicate_registration():
    registry = ScenarioRegistry()
    registry.register("caving", lambda s: None)
    with pytest.raises(ScenarioError):
        registry.register("caving", lambda s: None)


def test_extension_without_setup():
    with pytest.raises(ScenarioError, match="no setup"):
        ScenarioRegistry().load_extension("errors")


def test_caving_program_excavates():
    program = default_registry().build(load_scenario("caving-2d-model2"))
    assert isinstance(program, CavingProgram)
    assert program.steps == 10
    first, last = program.mesh(0), program.mesh(9)
    assert last.area < first.area
    assert first.area == pytest.approx(3600.0 * 950.0 - 200.0 * 50.0)
    assert last.area == pytest.approx(3600.0 * 950.0 - 1200.0 * 500.0)
    assert program.mesh(9) is last
    assert program.supports(3)[0].tag is BoundaryTag.DOWN
    np.testing.assert_array_equal(program.initial_damage(first), 0.0)


def test_compression_program_loading():
    program = default_registry().build(load_scenario("compression-2d-model2"))
    assert isinstance(program, CompressionProgram)
    assert [program.time(i) for i in range(program.steps)] == pytest.approx([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    top = program.supports(5)[-1]
    assert top.tag is BoundaryTag.UP and top.component == 1
    assert top.value == pytest.approx(-0.005)
    assert program.supports(0)[-1].value == 0.0
    assert program.mesh(0) is program.mesh(4)
    assert program.mesh(0).cavity is None


def test_seed_band():
    mesh = build_mesh(Box(0.0, 1.0, 0.0, 1.0), 0.1, 0.1)
    alpha = seed_band(mesh, (0.0, 0.0), (1.0, 1.0), 0.05, 0.5)
    on_diagonal = np.isclose(mesh.nodes[:, 0], mesh.nodes[:, 1])
    np.testing.assert_array_equal(alpha[on_diagonal], 0.5)
    np.testing.assert_array_equal(alpha[~on_diagonal], 0.0)


def test_distance_to_segment_clamps_to_the_ends():
    points = np.array([[0.5, 1.0], [-1.0, 0.0], [3.0, 4.0]])
    np.testing.assert_allclose(distance_to_segment(points, (0.0, 0.0), (1.0, 0.0)), [1.0, 1.0, np.hypot(2.0, 4.0)])


def test_localization_ratio():
    mesh = build_mesh(Box(0.0, 1.0, 0.0, 1.0), 0.1, 0.1)
    law = DamageLaw(2, 1.0)
    assert localization_ratio(mesh, np.zeros(mesh.n_nodes), law, (0.0, 0.0), (1.0, 1.0), 0.1) == 0.0
    banded = seed_band(mesh, (0.0, 0.0), (1.0, 1.0), 0.05, 0.5)
    assert localization_ratio(mesh, banded, law, (0.0, 0.0), (1.0, 1.0), 0.1) == pytest.approx(1.0)
    uniform = localization_ratio(mesh, np.full(mesh.n_nodes, 0.3), law, (0.0, 0.0), (1.0, 1.0), 0.1)
    assert 0.0 < uniform < 1.0


def _coarse_compression(model: int, steps: int = 6):
    scenario = load_scenario(f"compression-2d-model{model}")
    scenario.geometry = GeometrySection(xmin=0.0, xmax=0.12, ymin=0.0, ymax=0.2, h_coarse=0.008, h_fine=0.008,
                                        band=0.008)
    scenario.scenario.steps = steps
    return scenario.validate()


def _final_ratio(scenario):
    program = default_registry().build(scenario)
    states, _ = run_quasi_static(program, scenario.solver)
    s = scenario.seed
    final = states[-1]
    return localization_ratio(final.mesh, final.alpha, program.params.law, (s.x0, s.y0), (s.x1, s.y1),
                              4.0 * program.params.ell)


@pytest.mark.slow
def test_compression_localizes_except_for_the_hardening_model():
    ratios = {model: _final_ratio(_coarse_compression(model)) for model in (1, 2, 3, 4)}
    for model in (1, 3, 4):
        assert ratios[model] > ratios[2]


@pytest.mark.slow
@pytest.mark.parametrize("model", [1, 2, 3, 4])
def test_caving_preset_damage_grows_over_the_cavity(model):
    scenario = load_scenario(f"caving-2d-model{model}")
    states, history = run_quasi_static(default_registry().build(scenario), scenario.solver)
    assert len(states) == 10
    assert all(np.all((s.alpha >= 0.0) & (s.alpha <= 1.0)) for s in states)
    assert sum(r.kkt_violations for r in history) == 0
    assert sum(r.damage_failures for r in history) == 0

    peaks = [s.max_alpha for s in states]
    assert all(b >= a - 1e-12 for a, b in zip(peaks, peaks[1:]))
    if model == 4:
        assert peaks[-1] < 1.0
    else:
        assert peaks[-1] >= 0.99


def _nonmonotone(record) -> bool:
    errors = [1.0] + record.errors
    return any(b > a for a, b in zip(errors, errors[1:]))


@pytest.mark.slow
def test_fast_algorithm_needs_no_more_iterations_on_caving_model2():
    base = load_scenario("caving-2d-model2")
    histories = {}
    for algorithm in Algorithm:
        scenario = dataclasses.replace(base, solver=dataclasses.replace(base.solver, algorithm=algorithm))
        states, history = run_quasi_static(default_registry().build(scenario), scenario.solver)
        assert len(history) == 10 and history.converged
        assert sum(r.kkt_violations for r in history) == 0
        histories[algorithm] = history

    alternate, fast = histories[Algorithm.ALTERNATE], histories[Algorithm.FAST]
    assert not any(_nonmonotone(r) for r in fast)
    assert fast.total_outer <= alternate.total_outer
    if any(_nonmonotone(r) for r in alternate):
        assert fast.total_outer < alternate.total_outer
