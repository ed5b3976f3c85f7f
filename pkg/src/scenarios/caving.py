"""Block-caving excavation: a box with a bottom-centred cavity growing step by step."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from core.fem import DEFAULT_SUPPORTS, BodyLoads, Support
from core.material import MaterialParams
from core.mesh import Box, CavitySequence, Mesh, MeshSizes, excavate
from scenarios.compression import seed_band

logger = logging.getLogger("caving.scenarios.caving")


@dataclass
class CavingProgram:
    name: str
    params: MaterialParams
    bounds: Box
    sizes: MeshSizes
    sequence: CavitySequence
    body: BodyLoads
    seed: tuple | None = None
    _meshes: dict[int, Mesh] = field(default_factory=dict, repr=False)

    @property
    def steps(self) -> int:
        return self.sequence.count

    def mesh(self, step: int) -> Mesh:
        if step not in self._meshes:
            mesh = excavate(self.bounds, self.sizes, self.sequence, step)
            logger.debug(f"step {step}: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, area {mesh.area:.6g}")
            self._meshes[step] = mesh
        return self._meshes[step]

    def loads(self, step: int) -> BodyLoads:
        return self.body

    def supports(self, step: int) -> tuple[Support, ...]:
        return DEFAULT_SUPPORTS

    def initial_damage(self, mesh: Mesh) -> np.ndarray:
        if self.seed is None:
            return np.zeros(mesh.n_nodes)
        return seed_band(mesh, *self.seed)


def build(scenario) -> CavingProgram:
    seed = None
    if scenario.seed.enabled:
        s = scenario.seed
        seed = ((s.x0, s.y0), (s.x1, s.y1), s.width, s.value)
    return CavingProgram(
        name=scenario.scenario.name,
        params=scenario.material_params(),
        bounds=scenario.box(),
        sizes=scenario.sizes(),
        sequence=scenario.cavity_sequence(),
        body=scenario.loads,
        seed=seed,
    )


def setup(registry):
    registry.register("caving", build)
