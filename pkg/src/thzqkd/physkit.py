"""
Physical-constant primitives: black-body photon statistics, preparation
variance and the bosonic entropy function.

All variances are in shot-noise units (SNU), vacuum = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

PLANCK = 6.62607015e-34  # J s (non-reduced)
BOLTZMANN = 1.380649e-23  # J / K
ROOM_TEMPERATURE = 296.0  # K

# entropy_h clamps [1 - H_CLAMP, 1) to exactly 1
H_CLAMP = 1e-9


@dataclass(frozen=True)
class EnvironmentSpec:
    """Carrier frequency (Hz, ordinary not angular) and temperature (K)."""

    frequency: float
    temperature: float = ROOM_TEMPERATURE

    def __post_init__(self):
        _check_positive("frequency", self.frequency)
        _check_positive("temperature", self.temperature)


@dataclass(frozen=True)
class PreparationVariance:
    v0: float
    nbar: float


def _check_positive(name, value):
    if not (value > 0) or not math.isfinite(value):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def mean_thermal_photons(env: EnvironmentSpec) -> float:
    """Planck occupation ``1 / (exp(h f / k_B t) - 1)`` with f in Hz."""
    x = PLANCK * env.frequency / (BOLTZMANN * env.temperature)
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def preparation_variance(frequency: float, temperature: float = ROOM_TEMPERATURE) -> PreparationVariance:
    """Thermal quadrature variance ``V0 = 2 nbar + 1`` of the source mode."""
    nbar = mean_thermal_photons(EnvironmentSpec(frequency, temperature))
    return PreparationVariance(v0=2.0 * nbar + 1.0, nbar=nbar)


def v0_of(frequency: float, temperature: float = ROOM_TEMPERATURE) -> float:
    """Shortcut returning only the preparation variance in SNU."""
    return preparation_variance(frequency, temperature).v0


def frequency_from_variance(v0: float, temperature: float = ROOM_TEMPERATURE) -> float:
    """Invert the Planck map: frequency (Hz) at which the thermal variance is ``v0``."""
    _check_positive("temperature", temperature)
    if not (v0 > 1.0):
        raise DomainError(f"v0 must exceed 1 SNU for a finite frequency, got {v0!r}")
    if math.isinf(v0):
        return 0.0
    nbar = (v0 - 1.0) / 2.0
    # h f / k t = log(1 + 1/nbar); log1p keeps precision as nbar -> 0 or infinity
    return BOLTZMANN * temperature * math.log1p(1.0 / nbar) / PLANCK


def entropy_h(x):
    """Von Neumann entropy (bits) of a single-mode thermal state with
    symplectic eigenvalue ``x``.

    ``h(x) = (x+1)/2 log2((x+1)/2) - (x-1)/2 log2((x-1)/2)``

    Accepts scalars or arrays. Values in ``[1 - 1e-9, 1)`` are treated as
    exactly 1 to absorb round-off from spectrum computations.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 1.0 - H_CLAMP):
        raise DomainError(f"symplectic eigenvalue must be >= 1, got {x!r}")
    arr = np.maximum(arr, 1.0)
    a = (arr + 1.0) / 2.0
    b = (arr - 1.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        # a log a - b log b, rewritten as log b + a log1p(1/b) for large x
        near = (a * np.log(a) - np.where(b > 0, b * np.log(np.where(b > 0, b, 1.0)), 0.0))
        far = np.log(np.where(b > 0, b, 1.0)) + a * np.log1p(1.0 / np.where(b > 0, b, 1.0))
    out = np.where(arr < 3.0, near, far) / math.log(2.0)
    if out.ndim == 0:
        return float(out)
    return out


def lambda_mix(x: float, y: float, T: float) -> float:
    """Transmissivity-weighted mix ``T x + (1 - T) y``."""
    if not (0.0 <= T <= 1.0):
        raise DomainError(f"transmissivity must lie in [0, 1], got {T!r}")
    return T * x + (1.0 - T) * y
