"""Plane-strain compression specimen with a seeded diagonal band.

The bottom is clamped and the top is pushed down by ``top_displacement * t``
with ``t`` running uniformly from 0 to ``end_time`` over the steps. The sides
are traction free and there is no self-weight.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from core.fem import BodyLoads, Support, lumped_mass
from core.material import DamageLaw, MaterialParams, dissipation
from core.mesh import BoundaryTag, Box, Mesh, MeshSizes, build_mesh

logger = logging.getLogger("caving.scenarios.compression")

Point = tuple[float, float]


def distance_to_segment(points: np.ndarray, start: Point, end: Point) -> np.ndarray:
    a = np.asarray(start, dtype=float)
    ab = np.asarray(end, dtype=float) - a
    length2 = float(ab @ ab)
    if length2 == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / length2, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def seed_band(mesh: Mesh, start: Point, end: Point, width: float, value: float) -> np.ndarray:
    """Damage ``value`` on nodes within ``width / 2`` of the segment, zero elsewhere."""
    alpha = np.zeros(mesh.n_nodes)
    alpha[distance_to_segment(mesh.nodes, start, end) <= 0.5 * width] = value
    return alpha


def localization_ratio(mesh: Mesh, alpha, law: DamageLaw, start: Point, end: Point, radius: float) -> float:
    """Share of the dissipated energy (lumped integral of w) lying within ``radius`` of the segment."""
    w, _, _ = dissipation(law, alpha)
    energy = w * lumped_mass(mesh)
    total = float(energy.sum())
    if total <= 0.0:
        return 0.0
    near = distance_to_segment(mesh.nodes, start, end) <= radius
    return float(energy[near].sum()) / total


@dataclass
class CompressionProgram:
    name: str
    params: MaterialParams
    bounds: Box
    sizes: MeshSizes
    body: BodyLoads
    steps: int
    top_displacement: float
    end_time: float
    seed: tuple | None = None

    @cached_property
    def _mesh(self) -> Mesh:
        mesh = build_mesh(self.bounds, self.sizes.h_coarse, self.sizes.h_fine, None, self.sizes.band)
        logger.debug(f"specimen mesh: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles")
        return mesh

    def mesh(self, step: int) -> Mesh:
        return self._mesh

    def time(self, step: int) -> float:
        if self.steps == 1:
            return self.end_time
        return self.end_time * step / (self.steps - 1)

    def loads(self, step: int) -> BodyLoads:
        return self.body

    def supports(self, step: int) -> tuple[Support, ...]:
        return (
            Support(BoundaryTag.DOWN, 0, 0.0),
            Support(BoundaryTag.DOWN, 1, 0.0),
            Support(BoundaryTag.UP, 1, -self.top_displacement * self.time(step)),
        )

    def initial_damage(self, mesh: Mesh) -> np.ndarray:
        if self.seed is None:
            return np.zeros(mesh.n_nodes)
        return seed_band(mesh, *self.seed)


def build(scenario) -> CompressionProgram:
    seed = None
    if scenario.seed.enabled:
        s = scenario.seed
        seed = ((s.x0, s.y0), (s.x1, s.y1), s.width, s.value)
    return CompressionProgram(
        name=scenario.scenario.name,
        params=scenario.material_params(),
        bounds=scenario.box(),
        sizes=scenario.sizes(),
        body=scenario.loads,
        steps=scenario.scenario.steps,
        top_displacement=scenario.loading.top_displacement,
        end_time=scenario.loading.end_time,
        seed=seed,
    )


def setup(registry):
    registry.register("compression", build)
