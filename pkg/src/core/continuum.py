"""Small dense tensor algebra for isotropic small-strain elasticity.

Symmetric tensors are stored in Voigt order (xx, yy, zz, xy, xz, yz) with the
*tensor* shear components (no engineering factor). The factor of two for the
off-diagonal entries is applied in ``contract`` and nowhere else.

All arrays may carry leading batch dimensions, so one ``SymTensor3`` can hold
the strain of every element of a mesh.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ParameterError

# weights of the six stored components in a full double contraction
_CONTRACT_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
_IDENTITY = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class SymTensor3:
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape[-1:] != (6,):
            raise ValueError(f"SymTensor3 needs a trailing axis of length 6, got shape {comps.shape}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, shape: tuple[int, ...] = ()) -> SymTensor3:
        return cls(np.zeros((*shape, 6)))

    @classmethod
    def identity(cls, scale: float | np.ndarray = 1.0) -> SymTensor3:
        scale = np.asarray(scale, dtype=float)
        return cls(scale[..., None] * _IDENTITY)

    @classmethod
    def diag(cls, xx, yy, zz) -> SymTensor3:
        xx, yy, zz = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (xx, yy, zz)))
        zero = np.zeros_like(xx)
        return cls(np.stack([xx, yy, zz, zero, zero, zero], axis=-1))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> SymTensor3:
        m = np.asarray(m, dtype=float)
        sym = 0.5 * (m + np.swapaxes(m, -1, -2))
        return cls(np.stack(
            [sym[..., 0, 0], sym[..., 1, 1], sym[..., 2, 2], sym[..., 0, 1], sym[..., 0, 2], sym[..., 1, 2]],
            axis=-1,
        ))

    def to_matrix(self) -> np.ndarray:
        c = self.components
        rows = [
            np.stack([c[..., 0], c[..., 3], c[..., 4]], axis=-1),
            np.stack([c[..., 3], c[..., 1], c[..., 5]], axis=-1),
            np.stack([c[..., 4], c[..., 5], c[..., 2]], axis=-1),
        ]
        return np.stack(rows, axis=-2)

    def trace(self) -> np.ndarray:
        return self.components[..., 0] + self.components[..., 1] + self.components[..., 2]

    def __add__(self, other: SymTensor3) -> SymTensor3:
        return SymTensor3(self.components + other.components)

    def __sub__(self, other: SymTensor3) -> SymTensor3:
        return SymTensor3(self.components - other.components)

    def __mul__(self, scale) -> SymTensor3:
        scale = np.asarray(scale, dtype=float)
        return SymTensor3(scale[..., None] * self.components)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ElasticModuli:
    E: float
    nu: float

    def __post_init__(self):
        if not self.E > 0:
            raise ParameterError(f"Young's modulus must satisfy E > 0, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ParameterError(f"Poisson's ratio must satisfy -1 < nu < 0.5, got {self.nu}")

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def p_wave(self) -> float:
        """Constrained (oedometric) modulus lambda + 2 mu."""
        return self.lam + 2.0 * self.mu


def split(t: SymTensor3) -> tuple[SymTensor3, SymTensor3]:
    """Deviatoric and spherical parts of ``t``."""
    spherical = SymTensor3.identity(t.trace() / 3.0)
    return t - spherical, spherical


def isotropic_stress(eps: SymTensor3, moduli: ElasticModuli) -> SymTensor3:
    return 2.0 * moduli.mu * eps + SymTensor3.identity(moduli.lam * eps.trace())


def lift_plane_strain(eps2d: np.ndarray) -> SymTensor3:
    """Embed 2x2 symmetric strains (shape (..., 2, 2)) as 3D tensors with zero out-of-plane strain."""
    eps2d = np.asarray(eps2d, dtype=float)
    if eps2d.shape[-2:] != (2, 2):
        raise ValueError(f"plane strain tensors must have shape (..., 2, 2), got {eps2d.shape}")
    xy = 0.5 * (eps2d[..., 0, 1] + eps2d[..., 1, 0])
    zero = np.zeros_like(xy)
    return SymTensor3(np.stack([eps2d[..., 0, 0], eps2d[..., 1, 1], zero, xy, zero, zero], axis=-1))


def contract(a: SymTensor3, b: SymTensor3) -> np.ndarray:
    """Full double contraction a_ij b_ij."""
    return np.sum(_CONTRACT_WEIGHTS * a.components * b.components, axis=-1)
