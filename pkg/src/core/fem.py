"""P1 finite-element assembly for the elastic step and the damage functional.

Displacement dofs are interleaved, ``2 * node + component``. Strains are
constant per triangle. The damage functional

    P(alpha) = sum_i [ a^2(alpha_i) Q_i / (2E) + w(alpha_i) M_i ] + w1 ell^2 alpha^T K alpha

uses nodal (lumped) quadrature for the local terms, where ``M`` is the lumped
mass, ``K`` the scalar stiffness of grad alpha and ``Q_i`` the lumped
shear-compression measure of the current displacement.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from core.continuum import ElasticModuli, SymTensor3, lift_plane_strain
from core.material import MaterialParams, dissipation, shear_compression_measure, squared_degradation
from core.mesh import BoundaryTag, Mesh
from errors import AssemblyError, ParameterError

logger = logging.getLogger("caving.fem")


@dataclass(frozen=True)
class BodyLoads:
    rho: float = 2700.0
    grav: float = 9.81
    kbar: float = 1e9
    self_weight: bool = True
    confinement: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterError(f"density must satisfy rho > 0, got {self.rho}")
        if not self.grav > 0:
            raise ParameterError(f"gravity must satisfy grav > 0, got {self.grav}")
        if not self.kbar >= 0:
            raise ParameterError(f"Robin stiffness must satisfy kbar >= 0, got {self.kbar}")

    @staticmethod
    def height(mesh: Mesh) -> float:
        """Hmax of the current mesh (the vertical axis is the second coordinate)."""
        return float(mesh.nodes[:, 1].max())


@dataclass(frozen=True)
class Support:
    """Prescribed displacement ``value`` of ``component`` on every node of ``tag``."""

    tag: BoundaryTag
    component: int
    value: float = 0.0

    def __post_init__(self):
        if self.component not in (0, 1):
            raise ParameterError(f"support component must be 0 or 1, got {self.component}")


# u.n = 0 on the floor, tangential slip allowed
DEFAULT_SUPPORTS = (Support(BoundaryTag.DOWN, 1, 0.0),)


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass
class MeshOperators:
    """Damage-independent matrices of one mesh, reused across alternate iterations."""

    mass: np.ndarray
    stiffness: sp.csr_matrix

    @classmethod
    def of(cls, mesh: Mesh) -> MeshOperators:
        return cls(lumped_mass(mesh), scalar_stiffness(mesh))


def _check_nodal(mesh: Mesh, values, name: str, width: int | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    expected = (mesh.n_nodes,) if width is None else (mesh.n_nodes, width)
    if values.shape != expected:
        if width is not None and values.shape == (mesh.n_nodes * width,):
            return values.reshape(expected)
        raise AssemblyError(f"{name} has shape {values.shape}, expected {expected}")
    return values


def _check_elements(mesh: Mesh) -> None:
    bad = np.flatnonzero(mesh.signed_areas <= 0.0)
    if bad.size:
        raise AssemblyError(f"singular element {bad[0]} (area {mesh.signed_areas[bad[0]]:.3e})")


def element_strains(mesh: Mesh, u) -> SymTensor3:
    """Constant strain of every triangle, lifted to 3D plane strain."""
    u = _check_nodal(mesh, u, "displacement", width=2)
    grads = mesh.shape_gradients
    ue = u[mesh.triangles]
    # grad_u[e, i, j] = d u_i / d x_j
    grad_u = np.einsum("eai,eaj->eij", ue, grads)
    return lift_plane_strain(0.5 * (grad_u + np.swapaxes(grad_u, 1, 2)))


def lumped_mass(mesh: Mesh) -> np.ndarray:
    weights = np.repeat(mesh.signed_areas / 3.0, 3)
    return np.bincount(mesh.triangles.ravel(), weights=weights, minlength=mesh.n_nodes)


def _scatter(local: np.ndarray, dofs: np.ndarray, size: int) -> sp.csr_matrix:
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()


def scalar_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Matrix of (grad phi_i, grad phi_j) over the mesh."""
    grads = mesh.shape_gradients
    local = mesh.signed_areas[:, None, None] * np.einsum("eai,ebi->eab", grads, grads)
    return _scatter(local, mesh.triangles, mesh.n_nodes)


def lateral_pressure_coefficient(moduli: ElasticModuli) -> float:
    """lambda / (lambda + 2 mu), equal to nu / (1 - nu)."""
    return moduli.lam / moduli.p_wave


def lateral_pressure(moduli: ElasticModuli, loads: BodyLoads, z, hmax: float) -> np.ndarray:
    """Normal traction magnitude on the lateral walls; negative (compressive) below ``hmax``."""
    return lateral_pressure_coefficient(moduli) * loads.rho * loads.grav * (np.asarray(z, dtype=float) - hmax)


def _plane_strain_matrix(moduli: ElasticModuli) -> np.ndarray:
    lam, mu = moduli.lam, moduli.mu
    return np.array([
        [lam + 2.0 * mu, lam, 0.0],
        [lam, lam + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ])


def _strain_displacement(mesh: Mesh) -> np.ndarray:
    """B matrices with engineering shear, shape (m, 3, 6)."""
    grads = mesh.shape_gradients
    B = np.zeros((mesh.n_triangles, 3, 6))
    B[:, 0, 0::2] = grads[:, :, 0]
    B[:, 1, 1::2] = grads[:, :, 1]
    B[:, 2, 0::2] = grads[:, :, 1]
    B[:, 2, 1::2] = grads[:, :, 0]
    return B


def _element_dofs(mesh: Mesh) -> np.ndarray:
    t = mesh.triangles
    return np.column_stack([2 * t[:, 0], 2 * t[:, 0] + 1, 2 * t[:, 1], 2 * t[:, 1] + 1, 2 * t[:, 2], 2 * t[:, 2] + 1])


def _facet_geometry(mesh: Mesh, facets: np.ndarray):
    ends = mesh.nodes[facets]
    d = ends[:, 1] - ends[:, 0]
    length = np.hypot(d[:, 0], d[:, 1])
    # counter-clockwise boundary, outward normal on the right
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    return ends, length, normal


def _apply_supports(mesh: Mesh, matrix: sp.csr_matrix, rhs: np.ndarray, supports) -> LinearSystem:
    n = matrix.shape[0]
    prescribed = np.zeros(n)
    mask = np.zeros(n, dtype=bool)
    for support in supports:
        dofs = 2 * mesh.nodes_with(support.tag) + support.component
        mask[dofs] = True
        prescribed[dofs] = support.value
    if not np.any(mask):
        return LinearSystem(matrix, rhs)

    # symmetric elimination keeps the reduced matrix symmetric
    keep = sp.diags((~mask).astype(float))
    reduced = (keep @ matrix @ keep + sp.diags(mask.astype(float))).tocsr()
    reduced_rhs = keep @ (rhs - matrix @ prescribed) + prescribed
    return LinearSystem(reduced, reduced_rhs, np.flatnonzero(mask))


def assemble_elasticity(mesh: Mesh, alpha, params: MaterialParams, loads: BodyLoads,
                        supports=DEFAULT_SUPPORTS) -> LinearSystem:
    """Degraded plane-strain elasticity with self-weight, lateral confinement and Robin closure."""
    alpha = _check_nodal(mesh, alpha, "damage")
    _check_elements(mesh)
    n_dofs = 2 * mesh.n_nodes
    moduli = params.moduli

    alpha_e = alpha[mesh.triangles].mean(axis=1)
    scale = params.effective_degradation(alpha_e) * mesh.signed_areas
    B = _strain_displacement(mesh)
    local = scale[:, None, None] * np.einsum("eki,kl,elj->eij", B, _plane_strain_matrix(moduli), B)
    matrix = _scatter(local, _element_dofs(mesh), n_dofs)
    rhs = np.zeros(n_dofs)

    if loads.self_weight:
        weight = -loads.rho * loads.grav * mesh.signed_areas / 3.0
        np.add.at(rhs, 2 * mesh.triangles.ravel() + 1, np.repeat(weight, 3))

    lateral = mesh.facets_with(BoundaryTag.LAT)
    if lateral.size and (loads.kbar > 0 or loads.confinement):
        ends, length, normal = _facet_geometry(mesh, lateral)
        dofs = np.column_stack([2 * lateral[:, 0], 2 * lateral[:, 0] + 1,
                                2 * lateral[:, 1], 2 * lateral[:, 1] + 1])
        if loads.kbar > 0:
            edge = np.array([[2.0, 1.0], [1.0, 2.0]])
            nn = np.einsum("fi,fj->fij", normal, normal)
            robin = (loads.kbar * length / 6.0)[:, None, None, None, None] * np.einsum("ab,fij->faibj", edge, nn)
            matrix = matrix + _scatter(robin.reshape(-1, 4, 4), dofs, n_dofs)
        if loads.confinement:
            pressure = lateral_pressure(moduli, loads, ends[:, :, 1], BodyLoads.height(mesh))
            # linear traction along the facet, integrated exactly against the hat functions
            f0 = length / 6.0 * (2.0 * pressure[:, 0] + pressure[:, 1])
            f1 = length / 6.0 * (pressure[:, 0] + 2.0 * pressure[:, 1])
            nodal = np.column_stack([f0[:, None] * normal, f1[:, None] * normal])
            np.add.at(rhs, dofs.ravel(), nodal.ravel())

    return _apply_supports(mesh, matrix.tocsr(), rhs, supports)


class DamageFunctional:
    """The damage functional at a fixed displacement, as a function of nodal damage."""

    def __init__(self, mesh: Mesh, u, params: MaterialParams, operators: MeshOperators | None = None):
        self.mesh = mesh
        self.params = params
        ops = operators or MeshOperators.of(mesh)
        self.mass = ops.mass
        self.stiffness = ops.stiffness
        eps = element_strains(mesh, u)
        measure = shear_compression_measure(eps, params.moduli, params.kappa)
        lumped = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.signed_areas / 3.0 * measure, 3),
                             minlength=mesh.n_nodes)
        self.elastic = lumped / (2.0 * params.moduli.E)
        self.coefficient = params.gradient_coefficient

    def _alpha(self, alpha) -> np.ndarray:
        return _check_nodal(self.mesh, alpha, "damage")

    def value(self, alpha) -> float:
        alpha = self._alpha(alpha)
        a2, _, _ = squared_degradation(self.params.law, alpha)
        w, _, _ = dissipation(self.params.law, alpha)
        gradient_term = self.coefficient * float(alpha @ (self.stiffness @ alpha))
        return float(a2 @ self.elastic + w @ self.mass) + gradient_term

    def gradient(self, alpha) -> np.ndarray:
        alpha = self._alpha(alpha)
        _, da2, _ = squared_degradation(self.params.law, alpha)
        _, dw, _ = dissipation(self.params.law, alpha)
        return da2 * self.elastic + dw * self.mass + 2.0 * self.coefficient * (self.stiffness @ alpha)

    def hessian_parts(self, alpha) -> tuple[np.ndarray, sp.csr_matrix]:
        """Diagonal local part and constant gradient part, so that H = diag(d) + G."""
        alpha = self._alpha(alpha)
        _, _, dda2 = squared_degradation(self.params.law, alpha)
        _, _, ddw = dissipation(self.params.law, alpha)
        return dda2 * self.elastic + ddw * self.mass, (2.0 * self.coefficient * self.stiffness).tocsr()

    def hessian(self, alpha) -> sp.csr_matrix:
        diag, gradient_part = self.hessian_parts(alpha)
        return (sp.diags(diag) + gradient_part).tocsr()

    def residual(self, alpha) -> np.ndarray:
        return self.gradient(alpha) / self.mass

    def scale(self) -> float:
        """Magnitude of the local terms, used for round-off floors."""
        return float(np.abs(self.elastic).sum() + self.params.law.w11 * self.mass.sum())


def damage_objective(mesh: Mesh, u, alpha, params: MaterialParams) -> float:
    return DamageFunctional(mesh, u, params).value(alpha)


def damage_gradient(mesh: Mesh, u, alpha, params: MaterialParams) -> np.ndarray:
    return DamageFunctional(mesh, u, params).gradient(alpha)


def damage_hessian(mesh: Mesh, u, alpha, params: MaterialParams) -> sp.csr_matrix:
    return DamageFunctional(mesh, u, params).hessian(alpha)


def criterion_residual(mesh: Mesh, u, alpha, params: MaterialParams) -> np.ndarray:
    """Nodal left-hand side of the damage criterion: gradient over lumped nodal area."""
    return DamageFunctional(mesh, u, params).residual(alpha)
