"""Linear solves, the bound-constrained damage subproblem and the alternate loops."""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol

import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeResult
from scipy.sparse.linalg import MatrixRankWarning, cg, splu, spsolve

from core.fem import (
    DEFAULT_SUPPORTS,
    BodyLoads,
    DamageFunctional,
    LinearSystem,
    MeshOperators,
    Support,
    assemble_elasticity,
)
from core.material import MaterialParams, squared_degradation
from core.mesh import Mesh, transfer_damage
from errors import CavingError, DamageSolveError, EvolutionError, LinearSolveError, ParameterError, SolverError

logger = logging.getLogger("caving.solver")

LINEAR_SOLVERS = ("direct", "cg")


class Algorithm(str, Enum):
    ALTERNATE = "alternate"
    FAST = "fast"


@dataclass(frozen=True)
class SolverConfig:
    tol_outer: float = 1e-4
    max_outer: int = 200
    c_l: float = 0.9
    algorithm: Algorithm = Algorithm.ALTERNATE
    tol_lin: float = 1e-8
    tol_kkt: float = 1e-6
    max_inner_relax: int = 50
    max_newton: int = 100
    linear_solver: str = "direct"
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not 0.0 < self.c_l < 1.0:
            raise ParameterError(f"relaxation constant must satisfy 0 < c_l < 1, got {self.c_l}")
        for name in ("tol_outer", "tol_lin", "tol_kkt"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("max_outer", "max_inner_relax", "max_newton"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ParameterError(f"linear_solver must be one of {LINEAR_SOLVERS}, got {self.linear_solver!r}")


@dataclass
class State:
    u: np.ndarray
    alpha: np.ndarray
    lower: np.ndarray
    step: int
    mesh: Mesh | None = None

    @property
    def max_alpha(self) -> float:
        return float(self.alpha.max()) if self.alpha.size else 0.0


@dataclass
class StepRecord:
    step: int
    errors: list[float] = field(default_factory=list)
    blends: list[int] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)
    elapsed: list[float] = field(default_factory=list)
    converged: bool = False
    relax_capped: bool = False
    damage_failures: int = 0
    kkt_violations: int = 0
    max_alpha: float = 0.0

    @property
    def outer_iterations(self) -> int:
        return len(self.errors)

    @property
    def total_blends(self) -> int:
        return sum(self.blends)

    @property
    def wall_time(self) -> float:
        return self.elapsed[-1] if self.elapsed else 0.0


@dataclass
class ErrorHistory:
    records: list[StepRecord] = field(default_factory=list)

    def add(self, record: StepRecord) -> None:
        self.records.append(record)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def total_outer(self) -> int:
        return sum(r.outer_iterations for r in self.records)

    @property
    def total_blends(self) -> int:
        return sum(r.total_blends for r in self.records)

    @property
    def wall_time(self) -> float:
        return sum(r.wall_time for r in self.records)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.records)


def _relative_residual(system: LinearSystem, x: np.ndarray, b_norm: float) -> float:
    return float(np.linalg.norm(system.rhs - system.matrix @ x) / b_norm)


def solve_linear(system: LinearSystem, tol_lin: float = 1e-8, method: str = "direct") -> np.ndarray:
    b_norm = float(np.linalg.norm(system.rhs))
    if b_norm == 0.0:
        return np.zeros(system.size)

    if method == "direct":
        try:
            lu = splu(system.matrix.tocsc())
        except RuntimeError as err:
            raise LinearSolveError(f"sparse factorization failed: {err}", float("inf")) from err
        x = lu.solve(system.rhs)
        for _ in range(3):
            residual = _relative_residual(system, x, b_norm)
            if residual <= tol_lin or not np.isfinite(residual):
                break
            x = x + lu.solve(system.rhs - system.matrix @ x)
    elif method == "cg":
        diag = system.matrix.diagonal()
        if np.any(diag <= 0):
            raise LinearSolveError("Jacobi preconditioner needs a positive diagonal", float("inf"))
        precond = sp.diags(1.0 / diag)
        x, info = cg(system.matrix, system.rhs, rtol=tol_lin, maxiter=10 * system.size, M=precond)
        if info != 0:
            logger.debug(f"cg returned info={info}")
    else:
        raise SolverError(f"unknown linear solver {method!r}")

    residual = _relative_residual(system, x, b_norm)
    if not np.isfinite(residual) or residual > tol_lin:
        raise LinearSolveError(f"{method} solve did not reach tol_lin={tol_lin:g}", residual)
    return x


def kkt_tolerance(functional: DamageFunctional, alpha: np.ndarray, tol: float) -> float:
    """``tol`` floored at the round-off level of the largest nodal term."""
    _, da2, _ = squared_degradation(functional.params.law, alpha)
    gradient_term = 2.0 * functional.coefficient * (abs(functional.stiffness) @ np.abs(alpha))
    scale = (np.abs(da2 * functional.elastic) + gradient_term) / functional.mass
    return max(tol, 1e-10 * float(scale.max(initial=0.0)), 1e-10 * functional.params.law.w11)


def _result(x, f_val, g, kkt, nit, success, message) -> OptimizeResult:
    return OptimizeResult(x=x, fun=f_val, jac=g, kkt=kkt, nit=nit, success=success, message=message)


def projected_residual(x, g, lb, ub, mass) -> float:
    """Sup-norm of the projected gradient over the lumped mass; pinned nodes (lb >= ub) are ignored."""
    blocked = (lb >= ub) | ((x <= lb) & (g > 0)) | ((x >= ub) & (g < 0))
    return float(np.max(np.abs(np.where(blocked, 0.0, g)) / mass, initial=0.0))


def _newton_direction(functional: DamageFunctional, local, gradient_part, g, free) -> np.ndarray | None:
    """Reduced Newton step on the free set, convexified when the exact Hessian gives no descent."""
    if not np.any(free):
        return None
    shift = 1e-12 * functional.params.law.w11 * functional.mass
    for diag in (local, np.maximum(local, 0.0) + shift):
        H = (sp.diags(diag) + gradient_part).tocsr()[free][:, free]
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore", MatrixRankWarning)
            step = np.atleast_1d(spsolve(H.tocsc(), -g[free]))
        if np.all(np.isfinite(step)) and g[free] @ step < 0:
            return step
    return None


def projected_newton(functional: DamageFunctional, x0, lb, ub, tol: float = 1e-6,
                     max_iter: int = 100) -> OptimizeResult:
    """Projected Newton with an epsilon-active set for min P(x) subject to lb <= x <= ub.

    Nodes within epsilon of a bound they are pushed against take a diagonally
    scaled gradient step onto the bound; the rest take the reduced Newton step.
    When the arc search rejects it, a scaled projected-gradient step with
    adaptive length is tried. Decrease is tested up to the round-off level of
    the objective. Convergence is the sup-norm of the projected gradient
    divided by the lumped mass.
    """
    mass = functional.mass
    pinned = lb >= ub

    def gradient(z):
        # pinned nodes never move, their derivative may be unbounded
        return np.where(pinned, 0.0, functional.gradient(z))

    x = np.clip(x0, lb, ub)
    f_val = functional.value(x)
    g = gradient(x)
    scale = functional.scale()
    gradient_step = 1.0
    armijo = 1e-4

    for it in range(max_iter):
        kkt = projected_residual(x, g, lb, ub, mass)
        if kkt <= kkt_tolerance(functional, x, tol):
            return _result(x, f_val, g, kkt, it, True, "projected residual below tolerance")

        local, gradient_part = functional.hessian_parts(x)
        curvature = np.abs(local) + gradient_part.diagonal() + 1e-12 * functional.params.law.w11 * mass
        scaled = np.where(pinned, 0.0, -g / curvature)
        eps = min(1e-3, float(np.max(np.abs(np.clip(x + scaled, lb, ub) - x), initial=0.0)))
        near = pinned | ((x <= lb + eps) & (g > 0)) | ((x >= ub - eps) & (g < 0))

        candidates = []
        newton = _newton_direction(functional, local, gradient_part, g, ~near)
        if newton is not None:
            d = scaled.copy()
            d[~near] = newton
            candidates.append(("newton", d, 1.0))
        candidates.append(("gradient", scaled, gradient_step))

        # value differences below this are round-off
        noise = 1e-12 * (abs(f_val) + scale)
        accepted = False
        for kind, d, t in candidates:
            for _ in range(40):
                x_new = np.clip(x + t * d, lb, ub)
                if np.any(x_new != x):
                    f_new = functional.value(x_new)
                    if f_new <= f_val + armijo * float(g @ (x_new - x)) + noise:
                        accepted = True
                        break
                t *= 0.5
            if kind == "gradient":
                gradient_step = min(2.0 * t, 1.0) if accepted else max(t, 1e-12)
            if accepted:
                break

        if not accepted:
            return _result(x, f_val, g, kkt, it, False, "arc search failed to decrease the objective")
        x, f_val = x_new, f_new
        g = gradient(x)

    kkt = projected_residual(x, g, lb, ub, mass)
    success = kkt <= kkt_tolerance(functional, x, tol)
    return _result(x, f_val, g, kkt, max_iter, success, "maximum number of iterations reached")


def minimize_damage(mesh: Mesh, u, lower, params: MaterialParams, tol_kkt: float = 1e-6, *,
                    start=None, max_iter: int = 100, functional: DamageFunctional | None = None) -> np.ndarray:
    """Minimize the damage functional over lower <= alpha <= 1 at fixed displacement."""
    lower = np.asarray(lower, dtype=float)
    if lower.shape != (mesh.n_nodes,) or np.any(lower < 0.0) or np.any(lower > 1.0):
        raise ParameterError("lower bound must be a nodal field with values in [0, 1]")
    functional = functional or DamageFunctional(mesh, u, params)
    upper = np.ones_like(lower)
    x0 = lower if start is None else np.maximum(np.asarray(start, dtype=float), lower)

    result = projected_newton(functional, x0, lower, upper, tol=tol_kkt, max_iter=max_iter)
    logger.debug(f"damage subproblem: {result.message} after {result.nit} iteration(s), residual {result.kkt:.3e}")
    if not result.success:
        raise DamageSolveError(f"damage subproblem did not converge: {result.message}", result.x, result.kkt)
    return result.x


def kkt_violations(functional: DamageFunctional, alpha, lower, tol_kkt: float) -> int:
    """Nodes breaking the discrete damage criterion or consistency condition.

    Nodes at alpha = 1 are skipped: their residual carries the upper-bound
    multiplier and may be negative.
    """
    alpha = np.asarray(alpha, dtype=float)
    tol = kkt_tolerance(functional, alpha, tol_kkt)
    residual = functional.residual(alpha)
    below_one = alpha < 1.0
    criterion = below_one & (residual < -tol)
    complementarity = below_one & (np.abs(residual * (alpha - lower)) > tol * np.maximum(1.0, np.abs(residual)))
    return int(np.count_nonzero(criterion | complementarity))


def relax(previous: np.ndarray, current: np.ndarray, c_l: float) -> np.ndarray:
    return c_l * previous + (1.0 - c_l) * current


def _alternate(previous: State, mesh: Mesh, params: MaterialParams, loads: BodyLoads, cfg: SolverConfig,
               supports, relaxed: bool) -> tuple[State, StepRecord]:
    lower = np.asarray(previous.alpha, dtype=float)
    ops = MeshOperators.of(mesh)
    record = StepRecord(step=previous.step)
    started = time.perf_counter()

    alpha_prev = lower.copy()
    err_prev = 1.0
    u = np.zeros((mesh.n_nodes, 2))
    functional = None
    minimizer = alpha_prev

    for p in range(1, cfg.max_outer + 1):
        system = assemble_elasticity(mesh, alpha_prev, params, loads, supports)
        u = solve_linear(system, cfg.tol_lin, cfg.linear_solver).reshape(-1, 2)
        functional = DamageFunctional(mesh, u, params, ops)
        try:
            minimizer = minimize_damage(mesh, u, lower, params, cfg.tol_kkt, start=alpha_prev,
                                        max_iter=cfg.max_newton, functional=functional)
        except DamageSolveError as err:
            if cfg.strict:
                raise
            logger.warning(f"step {previous.step}, iteration {p}: {err}; keeping the best iterate")
            record.damage_failures += 1
            minimizer = err.best

        alpha = minimizer
        err = float(np.max(np.abs(alpha_prev - alpha), initial=0.0))
        blends = 0
        if relaxed:
            while err > err_prev and blends < cfg.max_inner_relax:
                alpha = np.clip(relax(alpha_prev, alpha, cfg.c_l), lower, 1.0)
                err = float(np.max(np.abs(alpha_prev - alpha), initial=0.0))
                blends += 1
            if err > err_prev:
                logger.warning(f"step {previous.step}, iteration {p}: relaxation cap {cfg.max_inner_relax} reached")
                record.relax_capped = True

        objective = functional.value(alpha)
        record.errors.append(err)
        record.blends.append(blends)
        record.objectives.append(objective)
        record.elapsed.append(time.perf_counter() - started)
        logger.debug(f"step {previous.step}, iteration {p}: error {err:.3e}, blends {blends}, objective {objective:.6e}")

        alpha_prev = alpha
        err_prev = err
        if err <= cfg.tol_outer:
            record.converged = True
            break

    if not record.converged:
        logger.warning(f"step {previous.step}: alternate loop not converged after {cfg.max_outer} iterations")
    if record.damage_failures:
        logger.warning(f"step {previous.step}: {record.damage_failures} damage subproblem(s) stopped early")

    # certificate on the last subproblem solution, which is a KKT point for its displacement
    record.kkt_violations = kkt_violations(functional, minimizer, lower, cfg.tol_kkt)
    record.max_alpha = float(alpha_prev.max(initial=0.0))
    state = State(u=u, alpha=alpha_prev, lower=lower, step=previous.step, mesh=mesh)
    return state, record


def alternate_step(previous: State, mesh: Mesh, params: MaterialParams, loads: BodyLoads, cfg: SolverConfig,
                   supports: tuple[Support, ...] = DEFAULT_SUPPORTS) -> tuple[State, StepRecord]:
    """Alternate minimization from ``previous``, whose damage is the lower bound on ``mesh``."""
    if cfg.algorithm is not Algorithm.ALTERNATE:
        raise SolverError(f"alternate_step needs algorithm 'alternate', got {cfg.algorithm.value!r}")
    return _alternate(previous, mesh, params, loads, cfg, supports, relaxed=False)


def fast_alternate_step(previous: State, mesh: Mesh, params: MaterialParams, loads: BodyLoads, cfg: SolverConfig,
                        supports: tuple[Support, ...] = DEFAULT_SUPPORTS) -> tuple[State, StepRecord]:
    """Alternate minimization with error-triggered relaxation toward the previous iterate."""
    if cfg.algorithm is not Algorithm.FAST:
        raise SolverError(f"fast_alternate_step needs algorithm 'fast', got {cfg.algorithm.value!r}")
    return _alternate(previous, mesh, params, loads, cfg, supports, relaxed=True)


class LoadingProgram(Protocol):
    """A sequence of meshes and loads driven step by step."""

    name: str
    params: MaterialParams
    steps: int

    def mesh(self, step: int) -> Mesh: ...

    def loads(self, step: int) -> BodyLoads: ...

    def supports(self, step: int) -> tuple[Support, ...]: ...

    def initial_damage(self, mesh: Mesh) -> np.ndarray: ...


StepCallback = Callable[[State, StepRecord], None]


def run_quasi_static(program: LoadingProgram, cfg: SolverConfig,
                     on_step: StepCallback | None = None) -> tuple[list[State], ErrorHistory]:
    step_fn = fast_alternate_step if cfg.algorithm is Algorithm.FAST else alternate_step
    states: list[State] = []
    history = ErrorHistory()
    prev_mesh: Mesh | None = None

    for i in range(program.steps):
        try:
            mesh = program.mesh(i)
            if prev_mesh is None:
                lower = np.clip(program.initial_damage(mesh), 0.0, 1.0)
            else:
                lower = transfer_damage(prev_mesh, states[-1].alpha, mesh)
            previous = State(u=np.zeros((mesh.n_nodes, 2)), alpha=lower, lower=lower, step=i, mesh=mesh)
            state, record = step_fn(previous, mesh, program.params, program.loads(i), cfg, program.supports(i))
        except CavingError as err:
            raise EvolutionError(f"{program.name}: step {i} failed: {err}", states, history) from err

        states.append(state)
        history.add(record)
        prev_mesh = mesh
        status = "converged" if record.converged else "NOT converged"
        logger.info(f"step {i + 1}/{program.steps}: {record.outer_iterations} iteration(s), "
                    f"{record.total_blends} blend(s), max alpha {record.max_alpha:.4f}, {status}")
        if on_step is not None:
            on_step(state, record)

    return states, history
