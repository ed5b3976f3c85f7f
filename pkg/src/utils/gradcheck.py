"""Finite-difference consistency of the damage functional's gradient and Hessian."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from core.continuum import ElasticModuli
from core.fem import DamageFunctional
from core.material import MODELS, DamageLaw, MaterialParams
from core.mesh import Box, Mesh, build_mesh
from errors import MeshError

logger = logging.getLogger("caving.gradcheck")

GRADIENT_TOLERANCE = 1e-5
HESSIAN_TOLERANCE = 1e-4


@dataclass
class GradcheckReport:
    gradient_errors: list[float] = field(default_factory=list)
    hessian_errors: list[float] = field(default_factory=list)

    @property
    def gradient_error(self) -> float:
        return max(self.gradient_errors, default=0.0)

    @property
    def hessian_error(self) -> float:
        return max(self.hessian_errors, default=0.0)

    @property
    def passed(self) -> bool:
        return self.gradient_error <= GRADIENT_TOLERANCE and self.hessian_error <= HESSIAN_TOLERANCE


def random_mesh(rng: np.random.Generator) -> Mesh:
    """Small jittered box mesh with at most 36 nodes."""
    lx, ly = rng.uniform(0.5, 1.5, size=2)
    h = max(lx, ly) / rng.integers(3, 6)
    mesh = build_mesh(Box(0.0, lx, 0.0, ly), h, h)
    interior = np.setdiff1d(np.arange(mesh.n_nodes), np.unique(mesh.facets))
    nodes = mesh.nodes.copy()
    nodes[interior] += rng.uniform(-0.1 * h, 0.1 * h, size=(interior.size, 2))
    jittered = dataclasses.replace(mesh, nodes=nodes)
    try:
        jittered.validate()
    except MeshError:
        return mesh
    return jittered


def random_instance(rng: np.random.Generator):
    mesh = random_mesh(rng)
    model = int(rng.choice(MODELS))
    params = MaterialParams(
        moduli=ElasticModuli(2.9e10, 0.3),
        law=DamageLaw(model, 1e3, p=float(rng.choice([1.0, 2.0, 4.0])), k=2.0),
        w1=1e6,
        ell=float(rng.uniform(0.01, 0.05)),
    )
    u = rng.normal(scale=1e-4, size=(mesh.n_nodes, 2))
    alpha = rng.uniform(0.1, 0.9, size=mesh.n_nodes)
    return mesh, u, alpha, params


def _relative(exact: np.ndarray, approx: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(exact))), np.finfo(float).tiny)
    return float(np.max(np.abs(exact - approx))) / scale


def gradient_error(functional: DamageFunctional, alpha: np.ndarray, step: float = 1e-6) -> float:
    fd = np.empty_like(alpha)
    for i in range(alpha.size):
        e = np.zeros_like(alpha)
        e[i] = step
        fd[i] = (functional.value(alpha + e) - functional.value(alpha - e)) / (2.0 * step)
    return _relative(functional.gradient(alpha), fd)


def hessian_error(functional: DamageFunctional, alpha: np.ndarray, step: float = 1e-6) -> float:
    fd = np.empty((alpha.size, alpha.size))
    for i in range(alpha.size):
        e = np.zeros_like(alpha)
        e[i] = step
        fd[:, i] = (functional.gradient(alpha + e) - functional.gradient(alpha - e)) / (2.0 * step)
    return _relative(functional.hessian(alpha).toarray(), fd)


def run_gradcheck(seed: int = 0, instances: int = 20) -> GradcheckReport:
    rng = np.random.default_rng(seed)
    report = GradcheckReport()
    for i in range(instances):
        mesh, u, alpha, params = random_instance(rng)
        functional = DamageFunctional(mesh, u, params)
        report.gradient_errors.append(gradient_error(functional, alpha))
        report.hessian_errors.append(hessian_error(functional, alpha))
        logger.debug(f"instance {i}: {params.law.label}, {mesh.n_nodes} nodes, "
                     f"gradient {report.gradient_errors[-1]:.2e}, hessian {report.hessian_errors[-1]:.2e}")
    return report
