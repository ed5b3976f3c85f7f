"""Damage laws of the shear-compression gradient damage model.

Four families are provided:

    model 1   a = (1-alpha)^2                    w = w11 * alpha
    model 2   a = (1-alpha)^2                    w = w11 * alpha^2
    model 3   a = (1-alpha)^p                    w = w11 * (1 - (1-alpha)^(p/2))
    model 4   a = (1-alpha) / (1 + (k-1) alpha)  w = w11 * alpha

``w11`` scales the local dissipation only; the gradient regularization is
scaled independently by ``MaterialParams.w1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from core.continuum import ElasticModuli, SymTensor3, contract, isotropic_stress, split
from errors import DamageDomainError, ParameterError

MODELS = (1, 2, 3, 4)

# model 3 derivatives with p < 2 are unbounded at alpha = 1; they are evaluated at 1 - alpha >= this floor
SINGULAR_FLOOR = 1e-8


def _check_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if not np.all((alpha >= 0.0) & (alpha <= 1.0)):
        bad = alpha[~((alpha >= 0.0) & (alpha <= 1.0))]
        raise DamageDomainError(f"damage must lie in [0, 1], got {bad.ravel()[:5]}")
    return alpha


@dataclass(frozen=True)
class DamageLaw:
    model: int
    w11: float
    p: float = 4.0
    k: float = 2.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"damage model must be one of {MODELS}, got {self.model}")
        if not self.w11 > 0:
            raise ParameterError(f"dissipation scale must satisfy w11 > 0, got {self.w11}")
        if self.model == 3 and not self.p > 0:
            raise ParameterError(f"model 3 exponent must satisfy p > 0, got {self.p}")
        if self.model == 4 and not self.k > 1:
            raise ParameterError(f"model 4 parameter must satisfy k > 1, got {self.k}")

    @property
    def label(self) -> str:
        if self.model == 3:
            return f"Model3(p={self.p:g})"
        if self.model == 4:
            return f"Model4(k={self.k:g})"
        return f"Model{self.model}"


def _degradation(law: DamageLaw, alpha: np.ndarray):
    s = 1.0 - alpha
    if law.model in (1, 2):
        return s**2, -2.0 * s, np.full_like(alpha, 2.0)
    if law.model == 3:
        p = law.p
        sd = np.maximum(s, SINGULAR_FLOOR)
        return s**p, -p * sd ** (p - 1.0), p * (p - 1.0) * sd ** (p - 2.0)
    c = law.k - 1.0
    d = 1.0 + c * alpha
    return s / d, -law.k / d**2, 2.0 * law.k * c / d**3


def _dissipation(law: DamageLaw, alpha: np.ndarray):
    w11 = law.w11
    if law.model in (1, 4):
        return w11 * alpha, np.full_like(alpha, w11), np.zeros_like(alpha)
    if law.model == 2:
        return w11 * alpha**2, 2.0 * w11 * alpha, np.full_like(alpha, 2.0 * w11)
    h = 0.5 * law.p
    s = 1.0 - alpha
    sd = np.maximum(s, SINGULAR_FLOOR)
    return w11 * (1.0 - s**h), w11 * h * sd ** (h - 1.0), -w11 * h * (h - 1.0) * sd ** (h - 2.0)


def degradation(law: DamageLaw, alpha):
    """Return (a, a', a'') of the stiffness degradation at ``alpha``."""
    return _degradation(law, _check_alpha(alpha))


def dissipation(law: DamageLaw, alpha):
    """Return (w, w', w'') of the local dissipation at ``alpha``."""
    return _dissipation(law, _check_alpha(alpha))


def squared_degradation(law: DamageLaw, alpha):
    """Return (a^2, (a^2)', (a^2)'') used by the damage functional."""
    a, da, dda = degradation(law, alpha)
    return a * a, 2.0 * a * da, 2.0 * (da * da + a * dda)


@dataclass(frozen=True)
class MaterialParams:
    moduli: ElasticModuli
    law: DamageLaw
    w1: float
    ell: float
    kappa: float = 1.0
    eta_r: float = 1e-6

    def __post_init__(self):
        if not self.w1 > 0:
            raise ParameterError(f"gradient scale must satisfy w1 > 0, got {self.w1}")
        if not self.ell > 0:
            raise ParameterError(f"internal length must satisfy ell > 0, got {self.ell}")
        if not self.kappa >= 0:
            raise ParameterError(f"kappa must satisfy kappa >= 0, got {self.kappa}")
        if not 0.0 <= self.eta_r < 1e-2:
            raise ParameterError(f"residual stiffness must satisfy 0 <= eta_r << 1, got {self.eta_r}")

    @property
    def gradient_coefficient(self) -> float:
        """Coefficient of |grad alpha|^2 in the minimized functional (w1 * ell^2, no 1/2)."""
        return self.w1 * self.ell**2

    def effective_degradation(self, alpha):
        a, _, _ = degradation(self.law, alpha)
        return a + self.eta_r


def shear_compression_measure(eps: SymTensor3, moduli: ElasticModuli, kappa: float) -> np.ndarray:
    """(A0 eps)^d : (A0 eps)^d - (2/3) kappa (A0 eps)^s : (A0 eps)^s."""
    dev, sph = split(isotropic_stress(eps, moduli))
    return contract(dev, dev) - (2.0 / 3.0) * kappa * contract(sph, sph)


def driving_force(eps: SymTensor3, alpha, params: MaterialParams) -> np.ndarray:
    """Damage driving force H = ((a_eff^2)'(alpha) / E) * measure(eps)."""
    a, da, _ = degradation(params.law, alpha)
    a_eff = a + params.eta_r
    measure = shear_compression_measure(eps, params.moduli, params.kappa)
    return 2.0 * a_eff * da / params.moduli.E * measure


@dataclass
class HardeningReport:
    law: DamageLaw
    alphas: np.ndarray
    strain_sign: np.ndarray
    stress_sign: np.ndarray
    strain_hardening: list[tuple[float, float]] = field(default_factory=list)
    stress_softening: list[tuple[float, float]] = field(default_factory=list)
    stress_hardening: list[tuple[float, float]] = field(default_factory=list)

    def describe(self) -> list[str]:
        lines = [f"{self.law.label}, {self.alphas.size} samples on [0, {self.alphas[-1]:.6g}]"]
        for name, intervals in (
            ("strain hardening", self.strain_hardening),
            ("stress softening", self.stress_softening),
            ("stress hardening", self.stress_hardening),
        ):
            text = ", ".join(f"[{lo:.6g}, {hi:.6g})" for lo, hi in intervals) or "none"
            lines.append(f"{name}: {text}")
        if self.stress_softening and self.stress_softening[0][0] > 0:
            lines.append(f"stress softening threshold: alpha >= {self.stress_softening[0][0]:.6g}")
        return lines


def _intervals(alphas: np.ndarray, mask: np.ndarray, step: float) -> list[tuple[float, float]]:
    """Maximal runs of ``mask`` as half-open intervals [first, last + step)."""
    runs: list[tuple[float, float]] = []
    start = None
    for i, ok in enumerate(mask):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            runs.append((float(alphas[start]), float(alphas[i - 1] + step)))
            start = None
    if start is not None:
        runs.append((float(alphas[start]), 1.0))
    return runs


def classify_hardening(law: DamageLaw, samples: int = 1000) -> HardeningReport:
    """Sample the hardening sign functions of ``law`` on [0, 1 - 1/samples].

    The stiffness tensor is reduced to its scalar factor a(alpha) and the
    compliance to S = 1/a, so that

        strain hardening   <=>  w' a'' - w'' a' > 0
        stress softening   <=>  w' S'' - w'' S' > 0
        stress hardening   <=>  w' S'' - w'' S' < 0
    """
    if samples < 100:
        raise ParameterError(f"hardening classification needs samples >= 100, got {samples}")
    step = 1.0 / samples
    alphas = np.arange(samples) * step
    a, da, dda = degradation(law, alphas)
    _, dw, ddw = dissipation(law, alphas)

    dS = -da / a**2
    ddS = (2.0 * da**2 - a * dda) / a**3
    strain_sign = dw * dda - ddw * da
    stress_sign = dw * ddS - ddw * dS

    return HardeningReport(
        law=law,
        alphas=alphas,
        strain_sign=strain_sign,
        stress_sign=stress_sign,
        strain_hardening=_intervals(alphas, strain_sign > 0, step),
        stress_softening=_intervals(alphas, stress_sign > 0, step),
        stress_hardening=_intervals(alphas, stress_sign < 0, step),
    )
