"""Scenario files: flat ``section.key = value`` text with ``#`` comments.

Every key belongs to one of the sections below; unknown keys are rejected.
``load_scenario`` accepts a path or the name of a built-in preset.
"""
from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import get_type_hints

from dotenv.parser import parse_stream

from core.continuum import ElasticModuli
from core.fem import BodyLoads
from core.material import DamageLaw, MaterialParams
from core.mesh import Box, CavitySequence, MeshSizes
from core.solver import SolverConfig
from errors import CavingError, ScenarioError

KINDS = ("caving", "compression")


@dataclass
class ScenarioSection:
    kind: str = "caving"
    name: str = "caving-2d"
    steps: int = 10
    output_dir: str = "output"


@dataclass
class GeometrySection:
    xmin: float = -1540.0
    xmax: float = 2060.0
    ymin: float = -500.0
    ymax: float = 450.0
    h_coarse: float = 100.0
    h_fine: float = 25.0
    band: float = 100.0


@dataclass
class CavitySection:
    x_center: float = 0.0
    half_width_start: float = 100.0
    half_width_end: float = 600.0
    z_base: float = -500.0
    height_start: float = 50.0
    height_end: float = 500.0


@dataclass
class MaterialSection:
    model: int = 2
    E: float = 2.9e10
    nu: float = 0.3
    w1: float = 1e6
    w11: float = 1e3
    ell: float = 1.0
    kappa: float = 1.0
    p: float = 4.0
    k: float = 2.0
    eta_r: float = 1e-6


@dataclass
class LoadingSection:
    """Displacement program of the compression specimen: top u_y = -top_displacement * t."""

    top_displacement: float = 0.005
    end_time: float = 1.0


@dataclass
class SeedSection:
    enabled: bool = False
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 0.0
    y1: float = 0.0
    width: float = 0.0
    value: float = 0.5


@dataclass
class OutputSection:
    vtk: bool = True
    history: bool = True
    timing: bool = True


@dataclass
class Scenario:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    cavity: CavitySection = field(default_factory=CavitySection)
    material: MaterialSection = field(default_factory=MaterialSection)
    loads: BodyLoads = field(default_factory=BodyLoads)
    loading: LoadingSection = field(default_factory=LoadingSection)
    seed: SeedSection = field(default_factory=SeedSection)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputSection = field(default_factory=OutputSection)

    def material_params(self) -> MaterialParams:
        m = self.material
        return MaterialParams(
            moduli=ElasticModuli(m.E, m.nu),
            law=DamageLaw(m.model, m.w11, p=m.p, k=m.k),
            w1=m.w1,
            ell=m.ell,
            kappa=m.kappa,
            eta_r=m.eta_r,
        )

    def box(self) -> Box:
        g = self.geometry
        return Box(g.xmin, g.xmax, g.ymin, g.ymax)

    def sizes(self) -> MeshSizes:
        g = self.geometry
        return MeshSizes(g.h_coarse, g.h_fine, g.band)

    def cavity_sequence(self) -> CavitySequence:
        c = self.cavity
        return CavitySequence.linear(
            c.x_center,
            (c.half_width_start, c.half_width_end),
            c.z_base,
            (c.height_start, c.height_end),
            self.scenario.steps,
        )

    def validate(self) -> Scenario:
        if self.scenario.kind not in KINDS:
            raise ScenarioError(f"scenario.kind must be one of {KINDS}, got {self.scenario.kind!r}")
        if self.scenario.steps < 1:
            raise ScenarioError(f"scenario.steps must satisfy M >= 1, got {self.scenario.steps}")
        try:
            self.material_params()
            self.box()
            self.sizes()
            if self.scenario.kind == "caving":
                self.cavity_sequence()
        except CavingError as err:
            raise ScenarioError(f"invalid scenario: {err}") from err
        if self.scenario.kind == "caving" and not self.loads.kbar > 0:
            raise ScenarioError("caving scenarios need loads.kbar > 0 to hold the lateral boundary")
        if self.seed.enabled and not (self.seed.width > 0 and 0.0 <= self.seed.value <= 1.0):
            raise ScenarioError("seed needs width > 0 and 0 <= value <= 1")
        if self.loading.end_time <= 0:
            raise ScenarioError(f"loading.end_time must be > 0, got {self.loading.end_time}")
        return self


SECTIONS = tuple(f.name for f in dataclasses.fields(Scenario))


def _section_types() -> dict[str, type]:
    return get_type_hints(Scenario)


def _coerce(raw: str, kind, key: str, line: int | None):
    where = f"line {line}: " if line is not None else ""
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in {"1", "true", "yes", "on"}:
                return True
            if lowered in {"0", "false", "no", "off"}:
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if isinstance(kind, type) and issubclass(kind, Enum):
            return kind(raw.strip())
        return raw.strip()
    except ValueError:
        name = getattr(kind, "__name__", str(kind))
        raise ScenarioError(f"{where}{key} = {raw!r} is not a valid {name}") from None


def parse_scenario(text: str, base: Scenario | None = None) -> Scenario:
    """Parse scenario text on top of ``base`` (defaults when omitted)."""
    values: dict[str, dict[str, object]] = {}
    types = _section_types()
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ScenarioError(f"line {line}: cannot parse {binding.original.string.strip()!r}")
        if binding.key is None:
            continue
        if binding.value is None:
            raise ScenarioError(f"line {line}: {binding.key} has no value")
        section, _, key = binding.key.partition(".")
        if section not in types or not key:
            raise ScenarioError(f"line {line}: unknown key {binding.key!r} (sections: {', '.join(types)})")
        fields = get_type_hints(types[section])
        if key not in fields:
            raise ScenarioError(f"line {line}: unknown key {binding.key!r} (accepted: {', '.join(fields)})")
        values.setdefault(section, {})[key] = _coerce(binding.value, fields[key], binding.key, line)

    base = base or Scenario()
    sections = {}
    for name in types:
        current = getattr(base, name)
        try:
            sections[name] = dataclasses.replace(current, **values.get(name, {}))
        except CavingError as err:
            raise ScenarioError(f"invalid [{name}] values: {err}") from err
    return Scenario(**sections).validate()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_scenario(scenario: Scenario, path: str | Path | None = None) -> str:
    lines = []
    for name in SECTIONS:
        section = getattr(scenario, name)
        lines.append(f"# {name}")
        for f in dataclasses.fields(section):
            lines.append(f"{name}.{f.name} = {_format(getattr(section, f.name))}")
        lines.append("")
    text = "\n".join(lines)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _caving(model: int) -> Scenario:
    return Scenario(
        scenario=ScenarioSection(kind="caving", name=f"caving-2d-model{model}", steps=10),
        material=MaterialSection(model=model, w11=1e2 if model == 4 else 1e3),
    )


def _compression(model: int) -> Scenario:
    return Scenario(
        scenario=ScenarioSection(kind="compression", name=f"compression-2d-model{model}", steps=6),
        geometry=GeometrySection(xmin=0.0, xmax=0.12, ymin=0.0, ymax=0.2, h_coarse=0.004, h_fine=0.004, band=0.004),
        material=MaterialSection(model=model, w1=1e6, w11=1e6, ell=0.008),
        loads=BodyLoads(kbar=0.0, self_weight=False, confinement=False),
        loading=LoadingSection(top_displacement=0.005, end_time=1.0),
        seed=SeedSection(enabled=True, x0=0.0, y0=0.05, x1=0.12, y1=0.15, width=0.008, value=0.5),
        solver=SolverConfig(max_outer=100),
    )


def _trivial() -> Scenario:
    return Scenario(
        scenario=ScenarioSection(kind="caving", name="trivial", steps=1),
        geometry=GeometrySection(xmin=0.0, xmax=1.0, ymin=0.0, ymax=1.0, h_coarse=0.25, h_fine=0.25, band=0.25),
        cavity=CavitySection(x_center=0.5, half_width_start=0.0, half_width_end=0.0, z_base=0.0,
                             height_start=0.0, height_end=0.0),
        material=MaterialSection(model=1, E=1e9, w1=1.0, w11=1.0, ell=0.1),
        loads=BodyLoads(kbar=1e9, self_weight=False, confinement=False),
    )


PRESETS = {
    **{f"caving-2d-model{m}": (lambda m=m: _caving(m)) for m in (1, 2, 3, 4)},
    **{f"compression-2d-model{m}": (lambda m=m: _compression(m)) for m in (1, 2, 3, 4)},
    "trivial": _trivial,
}


def load_scenario(source: str | Path) -> Scenario:
    if str(source) in PRESETS:
        return PRESETS[str(source)]().validate()
    path = Path(source)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path} (or use a preset: {', '.join(PRESETS)})")
    return parse_scenario(path.read_text(encoding="utf-8"))
