"""
Opto-mechanical terahertz-optical converter.

A THz cavity mode and an optical cavity mode are each beam-splitter coupled
to a common linearised phononic mode and out-coupled to their waveguides.
Dynamics are written in the frame rotating at the mode resonances, for the
quadrature vector ``(q_o, q_t, q_m, p_o, p_t, p_m)``::

    dx/dt = M x + N x_in,   x_out = N x - x_in

All rates are in s^-1; ``omega`` is the offset from the carrier in rad/s.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import DomainError, SingularResponseError, UnstableDynamicsError
from .keyrate import KeyRateResult, ProtocolParams, inject_excess_noise, rate_rr_optimized
from .physkit import BOLTZMANN, PLANCK

PIVOT_TOL = 1e-12

Q_O, Q_T, Q_M, P_O, P_T, P_M = range(6)


@dataclass(frozen=True)
class ConverterParams:
    """Linearised converter parameters.

    ``kappa_m`` is the phonon damping rate (also spelled ``kappa_qp``).
    ``omega_m`` is kept for bookkeeping only; it drops out of the
    rotating-frame dynamics. Bath occupations are mean quanta per bath.
    """

    g_o: float
    g_t: float
    kappa_o: float
    kappa_t: float
    kappa_m: float = 0.0
    omega_m: float = 0.0
    n_o: float = 0.0
    n_t: float = 0.0
    n_m: float = 0.0

    def __post_init__(self):
        for name in ("g_o", "g_t", "kappa_m", "omega_m", "n_o", "n_t", "n_m"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("kappa_o", "kappa_t"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def kappa_qp(self) -> float:
        return self.kappa_m

    @property
    def is_symmetric(self) -> bool:
        """Symmetric lossless limit: equal couplings, equal out-couplings, no phonon damping."""
        return self.g_o == self.g_t and self.kappa_o == self.kappa_t and self.kappa_m == 0

    def with_(self, **changes) -> "ConverterParams":
        if "kappa_qp" in changes:
            changes["kappa_m"] = changes.pop("kappa_qp")
        return replace(self, **changes)


def symmetric(g: float, kappa: float, **kw) -> ConverterParams:
    return ConverterParams(g_o=g, g_t=g, kappa_o=kappa, kappa_t=kappa, **kw)


def bose_occupation(omega: float, temperature: float) -> float:
    """Thermal occupation of a mode at angular frequency ``omega`` (rad/s)."""
    x = PLANCK * omega / (2 * math.pi * BOLTZMANN * temperature)
    return 0.0 if x > 700 else 1.0 / math.expm1(x)


# ---------------------------------------------------------------------------
# dynamics

def build_dynamics(params: ConverterParams):
    """Return ``(M, N, g)``: 6x6 drift, 6x6 input coupling, 3x3 coupling matrix."""
    g = np.array(
        [
            [0.0, 0.0, params.g_o],
            [0.0, 0.0, params.g_t],
            [params.g_o, params.g_t, 0.0],
        ]
    )
    n = np.diag(np.sqrt([params.kappa_o, params.kappa_t, params.kappa_m]))
    M = np.block([[-n @ n / 2, g], [-g, -n @ n / 2]])
    N = scipy.linalg.block_diag(n, n)
    return M, N, g


@dataclass(frozen=True)
class FrequencyResponse:
    omega: float
    H: np.ndarray  # 6x6 complex, <x_out> = H <x_in>
    condition: float

    @property
    def t(self) -> complex:
        """THz-to-optical q-quadrature transmissivity ``H[q_o, q_t]``."""
        return complex(self.H[Q_O, Q_T])

    @property
    def t_reverse(self) -> complex:
        return complex(self.H[Q_T, Q_O])

    @property
    def mag2(self) -> float:
        return abs(self.t) ** 2

    @property
    def phase(self) -> float:
        # referenced to -t so the phase vanishes at zero offset
        return float(np.angle(-self.t))


def frequency_response(params: ConverterParams, omega: float) -> FrequencyResponse:
    """``H(omega) = -N (M + i omega 1)^-1 N - 1`` by LU with partial pivoting."""
    M, N, _ = build_dynamics(params)
    A = M + 1j * omega * np.eye(6)
    with warnings.catch_warnings():
        # exact singularity is reported below with a domain-specific error
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL * pivots.max():
        raise SingularResponseError(f"resolvent singular at omega={omega:g} (min pivot {pivots.min():.3e})")
    H = -N @ scipy.linalg.lu_solve((lu, piv), N.astype(complex)) - np.eye(6)
    return FrequencyResponse(omega, H, float(np.linalg.cond(A)))


def transmissivity_closed_form(params: ConverterParams, omega: float) -> complex:
    """Closed-form ``H[q_o, q_t]`` for arbitrary parameters."""
    go, gt, ko, kt, km = params.g_o, params.g_t, params.kappa_o, params.kappa_t, params.kappa_m
    d = 4 * go**2 + (ko - 2j * omega) * (km - 2j * omega)
    return -8 * go * gt * math.sqrt(ko * kt) / (4 * gt**2 * (ko - 2j * omega) + (kt - 2j * omega) * d)


def transmissivity_zero_frequency(params: ConverterParams) -> float:
    """``|t(0)| = 8 g_o g_t sqrt(k_o k_t) / [4 (g_o^2 k_t + g_t^2 k_o) + k_o k_m k_t]``."""
    go, gt, ko, kt, km = params.g_o, params.g_t, params.kappa_o, params.kappa_t, params.kappa_m
    num = 8 * go * gt * math.sqrt(ko * kt)
    den = 4 * (go**2 * kt + gt**2 * ko) + ko * km * kt
    return num / den


# ---------------------------------------------------------------------------
# symmetric-limit magnitude, phase and group delay

def magnitude2_symmetric(g: float, kappa: float, omega):
    w2 = np.square(omega)
    return kappa**2 / (kappa**2 + 4 * w2) * 16 * g**4 / (16 * g**2 * (g**2 - w2) + w2 * (kappa**2 + 4 * w2))


def phase_symmetric(g: float, kappa: float, omega):
    """Phase of ``-t``. The plain arctangent form jumps by pi at ``|omega| = g``;
    ``arctan2`` keeps it continuous."""
    omega = np.asarray(omega, dtype=float)
    num = omega * (8 * g**2 + kappa**2 - 4 * omega**2)
    den = 4 * kappa * (g**2 - omega**2)
    return np.arctan2(num, den) if np.ndim(omega) else float(np.arctan2(num, den))


def group_delay_symmetric(g: float, kappa: float, omega):
    w2 = np.square(omega)
    return 2 * kappa / (kappa**2 + 4 * w2) + 2 * kappa * (2 * g**2 + w2) / (
        16 * g**2 * (g**2 - w2) + w2 * (kappa**2 + 4 * w2)
    )


def magnitude2_taylor(g: float, kappa: float, omega):
    return 1 - (kappa**2 - 8 * g**2) ** 2 / (16 * g**4 * kappa**2) * np.square(omega)


def group_delay_taylor(g: float, kappa: float, omega):
    return (8 * g**2 + kappa**2) / (4 * g**2 * kappa) + (
        3 * kappa / (8 * g**4) - 8 / kappa**3 - kappa**3 / (64 * g**6)
    ) * np.square(omega)


@dataclass(frozen=True)
class ResponsePoint:
    mag2: float
    phase: float
    group_delay: float
    branch_flag: bool  # |omega| >= g: beyond the principal branch of the arctan form


def magnitude_phase_delay(params: ConverterParams, omega: float, step: float | None = None) -> ResponsePoint:
    """Magnitude squared, phase and group delay of ``t`` at ``omega``.

    Closed forms are used in the symmetric lossless limit; otherwise the
    numeric response is used with the group delay from a central difference
    of the unwrapped phase.
    """
    if params.is_symmetric:
        g, k = params.g_o, params.kappa_o
        return ResponsePoint(
            float(magnitude2_symmetric(g, k, omega)),
            float(phase_symmetric(g, k, omega)),
            float(group_delay_symmetric(g, k, omega)),
            abs(omega) >= g,
        )
    resp = frequency_response(params, omega)
    return ResponsePoint(resp.mag2, resp.phase, numeric_group_delay(params, omega, step), abs(omega) >= min(params.g_o, params.g_t))


def numeric_group_delay(params: ConverterParams, omega: float, step: float | None = None) -> float:
    if step is None:
        scale = max(params.kappa_o, params.kappa_t, params.g_o, params.g_t)
        step = 1e-5 * scale
    lo = frequency_response(params, omega - step).t
    hi = frequency_response(params, omega + step).t
    dphi = np.angle(hi / lo)  # phase difference without branch cuts
    return float(dphi / (2 * step))


def useful_bandwidth(g: float, kappa: float, tolerance: float = 0.1) -> float:
    """Largest offset (rad/s) below which both ``|t|^2 >= 1 - tol`` and the
    group delay stays within ``tol`` of its zero-frequency value."""
    if tolerance <= 0:
        return 0.0
    gd0 = group_delay_symmetric(g, kappa, 0.0)

    def margin(w):
        flat = tolerance - (1 - magnitude2_symmetric(g, kappa, w))
        linear = tolerance - abs(group_delay_symmetric(g, kappa, w) / gd0 - 1)
        return min(flat, linear)

    upper = 10 * max(g, kappa)
    grid = np.geomspace(upper * 1e-12, upper, 512)
    vals = np.array([margin(w) for w in grid])
    bad = np.nonzero(vals < 0)[0]
    if bad.size == 0:
        return float(upper)
    i = bad[0]
    if i == 0:
        return 0.0
    return float(brentq(margin, grid[i - 1], grid[i], xtol=1e-12 * grid[i], rtol=1e-14))


# ---------------------------------------------------------------------------
# noise

@dataclass(frozen=True)
class Occupations:
    n_o: float
    n_t: float
    n_m: float
    residual: float  # ||M V + V M^T + D||_inf / ||D||_inf
    covariance: np.ndarray


def steady_state_occupations(params: ConverterParams) -> Occupations:
    """Stationary intracavity occupations from ``M V + V M^T + D = 0``.

    Each bath contributes ``2 n + 1`` per quadrature through ``N``; the
    occupation of mode k is ``(V_qq + V_pp - 2) / 4``.
    """
    M, N, _ = build_dynamics(params)
    eig = np.linalg.eigvals(M)
    if np.max(eig.real) >= 0:
        raise UnstableDynamicsError(f"drift matrix not strictly stable (max Re = {np.max(eig.real):.3e})")
    baths = np.array([params.n_o, params.n_t, params.n_m])
    noise = np.concatenate([2 * baths + 1, 2 * baths + 1])
    D = N @ np.diag(noise) @ N.T
    V = scipy.linalg.solve_continuous_lyapunov(M, -D)
    V = (V + V.T) / 2
    residual = np.abs(M @ V + V @ M.T + D).max() / np.abs(D).max()
    occ = [(V[k, k] + V[k + 3, k + 3] - 2) / 4 for k in range(3)]
    return Occupations(*occ, residual=float(residual), covariance=V)


# Operating point at 1 K. Only the resulting THz occupation (1.72) is a
# reference value; couplings and mechanical frequency are illustrative, and
# kappa_m is tuned so that the phonon bath (100 MHz at 1 K) produces it.
PRESET_TEMPERATURE = 1.0
_OMEGA_M = 2 * math.pi * 100e6
PRESETS = {
    "calibrated-1K": symmetric(
        1e8,
        1e9,
        kappa_m=2.1432354140010726e7,
        omega_m=_OMEGA_M,
        n_m=bose_occupation(_OMEGA_M, PRESET_TEMPERATURE),
    ),
    "symmetric": symmetric(1e8, 1e9),
    "uncoupled-optical": ConverterParams(g_o=0.0, g_t=1e8, kappa_o=1e9, kappa_t=1e9, kappa_m=1e6),
}


def calibrate_phonon_damping(target_n_t: float, base: ConverterParams, lo: float = 1e3, hi: float = 1e8) -> float:
    """Phonon damping rate giving a THz-mode occupation of ``target_n_t``."""
    def f(logk):
        return steady_state_occupations(base.with_(kappa_m=10**logk)).n_t - target_n_t

    return 10 ** brentq(f, math.log10(lo), math.log10(hi), xtol=1e-14)


def noisy_rate_rr(protocol: ProtocolParams, n_thz: float, injection: str = "input", vacuum_offset: bool = False) -> KeyRateResult:
    """Optimised RR rate with converter noise ``V_c = 2 n_thz`` under Eve's control.

    ``vacuum_offset`` uses ``2 n_thz + 1`` instead.
    """
    if n_thz < 0:
        raise DomainError(f"n_thz must be >= 0, got {n_thz!r}")
    v_c = 2 * n_thz + (1 if vacuum_offset else 0)
    return rate_rr_optimized(inject_excess_noise(protocol, v_c, injection))
