from pathlib import Path

import pytest

from config import PRESETS, load_scenario, parse_scenario, write_scenario
from core.solver import Algorithm
from errors import ScenarioError


def test_caving_preset_defaults():
    scenario = load_scenario("caving-2d-model2")
    assert scenario.scenario.kind == "caving"
    assert scenario.scenario.steps == 10
    g = scenario.geometry
    assert (g.xmin, g.xmax, g.ymin, g.ymax) == (-1540.0, 2060.0, -500.0, 450.0)
    assert (g.h_coarse, g.h_fine, g.band) == (100.0, 25.0, 100.0)
    c = scenario.cavity
    assert (c.half_width_start, c.half_width_end, c.height_start, c.height_end) == (100.0, 600.0, 50.0, 500.0)
    m = scenario.material
    assert (m.model, m.E, m.nu, m.w1, m.w11, m.ell) == (2, 2.9e10, 0.3, 1e6, 1e3, 1.0)
    assert scenario.loads.kbar == 1e9
    assert scenario.solver.algorithm is Algorithm.ALTERNATE
    assert scenario.solver.c_l == 0.9
    assert scenario.cavity_sequence().count == 10


def test_model4_preset_uses_lower_dissipation():
    assert load_scenario("caving-2d-model4").material.w11 == 1e2
    assert load_scenario("caving-2d-model4").material_params().law.k == 2.0


def test_compression_preset():
    scenario = load_scenario("compression-2d-model1")
    assert scenario.scenario.kind == "compression"
    assert scenario.material.w1 == scenario.material.w11 == 1e6
    assert scenario.material.ell == 0.008
    assert not scenario.loads.self_weight and not scenario.loads.confinement
    assert scenario.seed.enabled


def test_parse_overrides_defaults():
    text = """
# a comment
scenario.name = demo
scenario.steps = 4
material.model = 3
material.p = 2.5
solver.algorithm = fast
solver.c_l = 0.8
output.timing = false
"""
    scenario = parse_scenario(text)
    assert scenario.scenario.name == "demo"
    assert scenario.scenario.steps == 4
    assert scenario.material_params().law.label == "Model3(p=2.5)"
    assert scenario.solver.algorithm is Algorithm.FAST
    assert scenario.solver.c_l == 0.8
    assert scenario.output.timing is False
    assert scenario.geometry.h_fine == 25.0
    assert scenario.solver.strict


def test_poisson_ratio_out_of_range():
    with pytest.raises(ScenarioError, match="< 0.5"):
        parse_scenario("material.nu = 0.7\n")


def test_unknown_key_reports_the_line():
    with pytest.raises(ScenarioError, match="line 2"):
        parse_scenario("material.E = 1e9\nmaterial.youngs = 3\n")
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario("mesh.h = 1\n")


def test_bad_value_type():
    with pytest.raises(ScenarioError, match="not a valid float"):
        parse_scenario("material.E = stiff\n")
    with pytest.raises(ScenarioError, match="not a valid bool"):
        parse_scenario("output.vtk = maybe\n")


@pytest.mark.parametrize("kwargs", ["solver.c_l = 1.0", "scenario.steps = 0", "scenario.kind = drilling",
                                    "geometry.h_fine = 20", "loads.kbar = 0"])
def test_invalid_values(kwargs):
    with pytest.raises(ScenarioError):
        parse_scenario(kwargs + "\n")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_survive_a_file_round_trip(name):
    scenario = load_scenario(name)
    assert parse_scenario(write_scenario(scenario)) == scenario


def test_load_from_file(tmp_path):
    path = tmp_path / "demo.cfg"
    write_scenario(load_scenario("trivial"), path)
    assert load_scenario(path) == load_scenario("trivial")
    assert load_scenario(str(path)).scenario.name == "trivial"


def test_missing_file():
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario("no/such/file.cfg")


@pytest.mark.parametrize("name", ["caving-2d-model2.cfg", "compression-2d-model1.cfg"])
def test_shipped_config_files_load(name):
    path = Path(__file__).resolve().parents[1] / "configs" / name
    scenario = load_scenario(path)
    assert scenario.scenario.kind == name.split("-")[0]
