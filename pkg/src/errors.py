class CavingError(Exception):
    """Base class for every failure raised by the simulator."""


class ParameterError(CavingError, ValueError):
    """A parameter record violates one of its invariants."""


class DamageDomainError(CavingError):
    """Damage value outside [0, 1] handed to a damage law."""


class MeshError(CavingError):
    """Invalid geometry, invalid mesh, or an impossible field transfer."""


class AssemblyError(CavingError):
    """Field/mesh mismatch or degenerate element during assembly."""


class LinearSolveError(CavingError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class DamageSolveError(CavingError):
    def __init__(self, message: str, best, kkt: float):
        super().__init__(f"{message} (projected residual {kkt:.3e})")
        self.best = best
        self.kkt = kkt


class SolverError(CavingError):
    """Misconfigured alternate loop or linear solver."""


class EvolutionError(CavingError):
    def __init__(self, message: str, states, history):
        super().__init__(message)
        # partial results up to the failing step
        self.states = states
        self.history = history


class ScenarioError(CavingError):
    """Scenario file could not be parsed or violates an invariant."""
