"""Box-with-cavity triangulations, excavation sequences and damage transfer.

Meshes are tensor-product grids graded toward the cavity: every axis is cut at
the cavity edges and at the edges of the refinement band, segments inside the
band use ``h_fine`` and the rest ``h_coarse``. Cells inside the cavity are
dropped and each remaining cell is split into two right triangles along its
rising diagonal, so construction is deterministic and conforming.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np
from matplotlib.tri import Triangulation
from scipy.spatial import cKDTree

from errors import MeshError

logger = logging.getLogger("caving.mesh")

# scalar damage per node, or (n, 2) displacement per node
Field = np.ndarray


class BoundaryTag(IntEnum):
    LAT = 1
    UP = 2
    DOWN = 3
    CAV = 4


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise MeshError(f"box bounds are empty: {self}")

    @property
    def diameter(self) -> float:
        return math.hypot(self.xmax - self.xmin, self.ymax - self.ymin)

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned cavity region; zero width or height means no cavity."""

    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def is_empty(self) -> bool:
        return not (self.x1 > self.x0 and self.y1 > self.y0)

    @property
    def area(self) -> float:
        return 0.0 if self.is_empty else (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, other: Rect) -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return self.x0 <= other.x0 and other.x1 <= self.x1 and self.y0 <= other.y0 and other.y1 <= self.y1


@dataclass(frozen=True)
class MeshSizes:
    h_coarse: float
    h_fine: float
    band: float

    def __post_init__(self):
        if not (self.h_coarse > 0 and self.h_fine > 0):
            raise MeshError(f"mesh sizes must be positive, got h_coarse={self.h_coarse}, h_fine={self.h_fine}")
        if self.h_fine > self.h_coarse:
            raise MeshError(f"mesh sizes must satisfy h_fine <= h_coarse, got {self.h_fine} > {self.h_coarse}")
        if not self.band > 0:
            raise MeshError(f"refinement band must be positive, got {self.band}")


@dataclass(eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    h_coarse: float
    h_fine: float
    bounds: Box | None = None
    cavity: Rect | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Constant gradients of the three P1 shape functions, shape (m, 3, 2)."""
        p = self.nodes[self.triangles]
        two_area = 2.0 * self.signed_areas
        grads = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / two_area
            grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / two_area
        return grads

    @property
    def area(self) -> float:
        return float(np.sum(self.signed_areas))

    @property
    def diameter(self) -> float:
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(*span))

    def facets_with(self, tag: BoundaryTag) -> np.ndarray:
        return self.facets[self.facet_tags == tag]

    def nodes_with(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.facets_with(tag))

    def validate(self) -> None:
        n = self.n_nodes
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise MeshError("triangle references a node index out of range")
        if self.facets.size and (self.facets.min() < 0 or self.facets.max() >= n):
            raise MeshError("boundary facet references a node index out of range")
        min_area = 1e-12 * self.h_fine**2
        bad = np.flatnonzero(self.signed_areas <= min_area)
        if bad.size:
            raise MeshError(f"{bad.size} triangle(s) degenerate or negatively oriented, first {bad[0]}")
        if len(self.facet_tags) != len(self.facets):
            raise MeshError("every boundary facet needs exactly one tag")
        if not np.all(np.isin(self.facet_tags, [t.value for t in BoundaryTag])):
            raise MeshError("boundary facet carries an unknown tag")
        edges = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        if np.count_nonzero(counts == 1) != len(self.facets):
            raise MeshError("tagged facets do not match the mesh boundary")


def _graded_axis(lo: float, hi: float, fine_lo: float, fine_hi: float, cuts: list[float],
                 h_fine: float, h_coarse: float) -> np.ndarray:
    breaks = sorted({lo, hi, *(c for c in (fine_lo, fine_hi, *cuts) if lo < c < hi)})
    points = [np.array([lo])]
    for a, b in zip(breaks[:-1], breaks[1:]):
        inside = fine_lo <= a and b <= fine_hi
        h = h_fine if inside else h_coarse
        n = max(1, math.ceil((b - a) / h - 1e-9))
        points.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(points)


def _boundary_facets(triangles: np.ndarray) -> np.ndarray:
    """Boundary edges, oriented as in their (counter-clockwise) triangle."""
    oriented = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    keys = np.sort(oriented, axis=1)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    return oriented[np.sort(first[counts == 1])]


def _tag_facets(nodes: np.ndarray, facets: np.ndarray, bounds: Box) -> np.ndarray:
    tol = 1e-9 * bounds.diameter
    ends = nodes[facets]
    x, y = ends[..., 0], ends[..., 1]
    tags = np.full(len(facets), BoundaryTag.CAV, dtype=int)
    on_lat = np.all(np.abs(x - bounds.xmin) <= tol, axis=1) | np.all(np.abs(x - bounds.xmax) <= tol, axis=1)
    tags[on_lat] = BoundaryTag.LAT
    tags[np.all(np.abs(y - bounds.ymin) <= tol, axis=1)] = BoundaryTag.DOWN
    tags[np.all(np.abs(y - bounds.ymax) <= tol, axis=1)] = BoundaryTag.UP
    return tags


def build_mesh(bounds: Box, h_coarse: float, h_fine: float, cavity: Rect | None = None,
               band: float = 1.0) -> Mesh:
    sizes = MeshSizes(h_coarse, h_fine, band)
    if cavity is not None and cavity.is_empty:
        cavity = None
    if cavity is not None:
        inside = (bounds.xmin < cavity.x0 and cavity.x1 < bounds.xmax
                  and bounds.ymin <= cavity.y0 and cavity.y1 < bounds.ymax)
        if not inside:
            raise MeshError(f"cavity {cavity} must lie inside {bounds} (it may only touch the bottom)")

    if cavity is None:
        xs = _graded_axis(bounds.xmin, bounds.xmax, 0.0, -1.0, [], sizes.h_fine, sizes.h_coarse)
        ys = _graded_axis(bounds.ymin, bounds.ymax, 0.0, -1.0, [], sizes.h_fine, sizes.h_coarse)
    else:
        xs = _graded_axis(bounds.xmin, bounds.xmax, cavity.x0 - band, cavity.x1 + band,
                          [cavity.x0, cavity.x1], sizes.h_fine, sizes.h_coarse)
        ys = _graded_axis(bounds.ymin, bounds.ymax, cavity.y0 - band, cavity.y1 + band,
                          [cavity.y0, cavity.y1], sizes.h_fine, sizes.h_coarse)

    nx, ny = len(xs) - 1, len(ys) - 1
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    ii, jj = ii.ravel(), jj.ravel()
    if cavity is not None:
        xc = 0.5 * (xs[ii] + xs[ii + 1])
        yc = 0.5 * (ys[jj] + ys[jj + 1])
        keep = ~((xc > cavity.x0) & (xc < cavity.x1) & (yc > cavity.y0) & (yc < cavity.y1))
        ii, jj = ii[keep], jj[keep]
    n00 = jj * (nx + 1) + ii
    n10, n01, n11 = n00 + 1, n00 + nx + 1, n00 + nx + 2
    triangles = np.empty((2 * len(n00), 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([n00, n10, n11])
    triangles[1::2] = np.column_stack([n00, n11, n01])

    used = np.unique(triangles)
    renumber = np.full(len(nodes), -1, dtype=np.int64)
    renumber[used] = np.arange(len(used))
    nodes = nodes[used]
    triangles = renumber[triangles]

    facets = _boundary_facets(triangles)
    mesh = Mesh(
        nodes=nodes,
        triangles=triangles,
        facets=facets,
        facet_tags=_tag_facets(nodes, facets, bounds),
        h_coarse=sizes.h_coarse,
        h_fine=sizes.h_fine,
        bounds=bounds,
        cavity=cavity,
    )
    mesh.validate()
    return mesh


@dataclass(frozen=True)
class CavitySequence:
    regions: tuple[Rect, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.regions:
            raise MeshError("a cavity sequence needs at least one region")
        for i, (small, large) in enumerate(zip(self.regions[:-1], self.regions[1:])):
            if not large.contains(small):
                raise MeshError(f"cavity regions must be nested: region {i} is not inside region {i + 1}")

    @classmethod
    def linear(cls, x_center: float, half_width: tuple[float, float], z_base: float,
               height: tuple[float, float], steps: int) -> CavitySequence:
        """Footprint [x_center -/+ half_width] over [z_base, z_base + height], both growing linearly."""
        if steps < 1:
            raise MeshError(f"a cavity sequence needs steps >= 1, got {steps}")
        frac = np.linspace(0.0, 1.0, steps) if steps > 1 else np.ones(1)
        regions = []
        for f in frac:
            hw = half_width[0] + f * (half_width[1] - half_width[0])
            h = height[0] + f * (height[1] - height[0])
            regions.append(Rect(x_center - hw, x_center + hw, z_base, z_base + h))
        return cls(tuple(regions))

    @property
    def count(self) -> int:
        return len(self.regions)

    def region(self, step: int) -> Rect:
        if not 0 <= step < self.count:
            raise MeshError(f"excavation step {step} outside [0, {self.count})")
        return self.regions[step]


def excavate(bounds: Box, sizes: MeshSizes, seq: CavitySequence, step: int) -> Mesh:
    """Fresh mesh of the box minus the cavity reached at ``step``."""
    return build_mesh(bounds, sizes.h_coarse, sizes.h_fine, seq.region(step), sizes.band)


def _barycentric(tri_points: np.ndarray, points: np.ndarray, tol: float):
    a, b, c = tri_points[:, 0], tri_points[:, 1], tri_points[:, 2]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    two_area = cross(b - a, c - a)
    lam = np.column_stack([
        cross(b - points, c - points),
        cross(c - points, a - points),
        cross(a - points, b - points),
    ]) / two_area[:, None]
    # distance of the point to each edge, positive inside
    edge_len = np.column_stack([
        np.linalg.norm(c - b, axis=1),
        np.linalg.norm(a - c, axis=1),
        np.linalg.norm(b - a, axis=1),
    ])
    dist = lam * two_area[:, None] / edge_len
    return lam, np.all(dist >= -tol, axis=1)


def _locate(old: Mesh, points: np.ndarray, tol: float, candidates: int = 6):
    """Containing triangle and barycentric coordinates; -1 when outside."""
    finder = Triangulation(old.nodes[:, 0], old.nodes[:, 1], triangles=old.triangles).get_trifinder()
    found = np.asarray(finder(points[:, 0], points[:, 1]), dtype=np.int64)
    bary = np.zeros((len(points), 3))
    p = old.nodes[old.triangles]

    hit = np.flatnonzero(found >= 0)
    bary[hit], _ = _barycentric(p[found[hit]], points[hit], np.inf)

    # the trifinder may miss points on the old boundary; accept them within tol
    missed = np.flatnonzero(found < 0)
    if missed.size:
        k = min(candidates, old.n_triangles)
        _, near = cKDTree(p.mean(axis=1)).query(points[missed], k=k)
        near = np.sort(near.reshape(missed.size, -1), axis=1)
        for col in range(near.shape[1]):
            todo = found[missed] < 0
            if not np.any(todo):
                break
            idx = missed[todo]
            tri = near[todo, col]
            lam, ok = _barycentric(p[tri], points[idx], tol)
            found[idx[ok]] = tri[ok]
            bary[idx[ok]] = lam[ok]
    return found, bary


def transfer_damage(old: Mesh, old_alpha: Field, new: Mesh) -> Field:
    """Carry a nodal damage field onto a new mesh; the result is the next lower bound.

    Coincident nodes copy the old value, nodes inside the old domain take the
    linear interpolant. Nodes outside it take the value of the nearest old
    node, not of the nearest point of the old domain.
    """
    if old.n_nodes == 0 or old.n_triangles == 0:
        raise MeshError("cannot transfer damage from an empty mesh")
    old_alpha = np.asarray(old_alpha, dtype=float)
    if old_alpha.shape != (old.n_nodes,):
        raise MeshError(f"damage field has shape {old_alpha.shape}, mesh has {old.n_nodes} nodes")
    if new is old:
        return np.clip(old_alpha, 0.0, 1.0)

    tol = 1e-10 * old.diameter
    dist, nearest = cKDTree(old.nodes).query(new.nodes)
    alpha = np.empty(new.n_nodes)

    # coincident nodes copy the old value exactly
    same = dist <= tol
    alpha[same] = old_alpha[nearest[same]]

    rest = np.flatnonzero(~same)
    if rest.size:
        tri, bary = _locate(old, new.nodes[rest], tol)
        inside = tri >= 0
        alpha[rest[inside]] = np.sum(bary[inside] * old_alpha[old.triangles[tri[inside]]], axis=1)
        outside = rest[~inside]
        if outside.size:
            logger.debug(f"{outside.size} node(s) outside the previous domain take the nearest old value")
            alpha[outside] = old_alpha[nearest[outside]]
    return np.clip(alpha, 0.0, 1.0)
