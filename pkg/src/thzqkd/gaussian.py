"""
Covariance-matrix algebra for zero-mean Gaussian states.

Covariance matrices (CMs) are plain ``numpy`` arrays in SNU (vacuum = 1)
with quadrature ordering ``(q1, p1, q2, p2, ...)``. Symplectic spectra are
1-D arrays sorted in descending order.

Mode labels used by the constructors:

* ``e``: the TMSV arm kept by the eavesdropper,
* ``E'``: the TMSV arm after mixing with the signal on the channel beam splitter,
* ``B``: the receiver's detected mode.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NumericalError
from .physkit import entropy_h

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-9

I2 = np.eye(2)
Z2 = np.diag([1.0, -1.0])


def symplectic_form(n: int) -> np.ndarray:
    """Standard symplectic form for ``n`` modes in (q1, p1, ...) ordering."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_cm(cm) -> np.ndarray:
    v = np.asarray(cm, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise DomainError(f"covariance matrix must be square with even size, got shape {v.shape}")
    if not np.allclose(v, v.T, rtol=0.0, atol=SYMMETRY_TOL * max(1.0, np.abs(v).max())):
        raise DomainError("covariance matrix is not symmetric")
    return v


def n_modes(cm) -> int:
    return np.asarray(cm).shape[0] // 2


def is_physical(cm, tol: float = PHYSICAL_TOL) -> bool:
    """Bona-fide check: all symplectic eigenvalues >= 1 - tol."""
    return bool(np.all(symplectic_spectrum_bruteforce(cm) >= 1.0 - tol))


# ---------------------------------------------------------------------------
# constructors

def tmsv_cm(W: float) -> np.ndarray:
    """Two-mode squeezed vacuum with thermal marginals ``W``."""
    if not (W >= 1.0):
        raise DomainError(f"TMSV variance must be >= 1, got {W!r}")
    c = math.sqrt(W * W - 1.0)
    return np.block([[W * I2, c * Z2], [c * Z2, W * I2]])


def _check_channel(T, W, V_A):
    if not (0.0 <= T <= 1.0):
        raise DomainError(f"transmissivity must lie in [0, 1], got {T!r}")
    if not (W >= 1.0):
        raise DomainError(f"attack variance W must be >= 1, got {W!r}")
    if not (V_A >= 1.0):
        raise DomainError(f"input variance V_A must be >= 1, got {V_A!r}")


def eve_output_cm(T: float, W: float, V_A: float) -> np.ndarray:
    """CM of the eavesdropper's output modes (e, E') after the entangling cloner.

    The channel beam splitter of transmissivity ``T`` mixes the sender's mode
    (variance ``V_A``) with arm E of a TMSV of variance ``W``.
    """
    _check_channel(T, W, V_A)
    c = math.sqrt(T * (W * W - 1.0))
    vE = T * W + (1.0 - T) * V_A
    return np.block([[W * I2, c * Z2], [c * Z2, vE * I2]])


def eve_conditional_cm_dr(T: float, W: float, V0: float, V_A: float) -> np.ndarray:
    """Eve's (e, E') CM conditioned on the sender's classical encoding.

    The modulation is removed from the q quadrature of E' only, since the
    receiver keeps a single quadrature per use.
    """
    cm = eve_output_cm(T, W, V_A)
    cm[2, 2] = T * W + (1.0 - T) * V0
    return cm


def bob_variance(T: float, W: float, V_A: float, eta: float, S: float) -> float:
    """Variance of the receiver's detected quadrature."""
    return eta * T * V_A + eta * (1.0 - T) * W + (1.0 - eta) * S


def eve_bob_joint_cm(T: float, W: float, V_A: float, eta: float, S: float) -> np.ndarray:
    """Joint CM of modes (e, E', B) with a noisy detector of efficiency ``eta``
    and trusted thermal noise ``S``."""
    _check_channel(T, W, V_A)
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"detector efficiency must lie in (0, 1], got {eta!r}")
    if not (S >= 1.0):
        raise DomainError(f"trusted noise S must be >= 1, got {S!r}")
    vb = bob_variance(T, W, V_A, eta, S)
    c_e = math.sqrt(eta * (1.0 - T) * (W * W - 1.0)) * Z2
    c_E = math.sqrt(eta * T * (1.0 - T)) * (W - V_A) * I2
    cm = np.zeros((6, 6))
    cm[:4, :4] = eve_output_cm(T, W, V_A)
    cm[0:2, 4:6] = c_e
    cm[2:4, 4:6] = c_E
    cm[4:6, 0:2] = c_e.T
    cm[4:6, 2:4] = c_E.T
    cm[4:6, 4:6] = vb * I2
    return cm


# ---------------------------------------------------------------------------
# measurement

def homodyne_condition(joint, measured_mode: int, quadrature: str = "q") -> np.ndarray:
    """Condition the remaining modes on a homodyne measurement of one mode.

    Equivalent to ``A - C (Pi B Pi)^+ C^T`` with ``Pi`` projecting on the
    measured quadrature; the pseudo-inverse of the rank-one ``Pi B Pi``
    reduces to a scalar division by the measured-quadrature variance.
    """
    v = _as_cm(joint)
    n = n_modes(v)
    if not (0 <= measured_mode < n):
        raise DomainError(f"measured mode {measured_mode} out of range for {n} modes")
    if quadrature not in ("q", "p"):
        raise DomainError(f"quadrature must be 'q' or 'p', got {quadrature!r}")
    k = 2 * measured_mode + (0 if quadrature == "q" else 1)
    var = v[k, k]
    if not (var > 0):
        raise DomainError(f"measured quadrature variance must be positive, got {var!r}")
    keep = [i for i in range(2 * n) if i // 2 != measured_mode]
    rest = v[np.ix_(keep, keep)]
    c = v[keep, k]
    return rest - np.outer(c, c) / var


def eve_conditional_cm_rr(T: float, W: float, V_A: float, eta: float, S: float) -> np.ndarray:
    """Eve's (e, E') CM conditioned on the receiver's q outcome, in closed form.

    Same matrix as ``homodyne_condition(eve_bob_joint_cm(...), 2, "q")``, but
    the conditioned q entries are rearranged so that no two O(V_A) terms are
    subtracted; the generic update loses about ``V_A * eps`` absolutely there.
    """
    joint = eve_bob_joint_cm(T, W, V_A, eta, S)
    s = (1.0 - eta) * S / eta
    theta = T * V_A + (1.0 - T) * W + s
    c = math.sqrt(T * (W * W - 1.0))
    cm = joint[:4, :4].copy()
    cm[0, 0] = W - (1.0 - T) * (W * W - 1.0) / theta
    cm[2, 2] = (W * V_A + s * (T * W + (1.0 - T) * V_A)) / theta
    cm[0, 2] = cm[2, 0] = c * (V_A + s) / theta
    return cm


# ---------------------------------------------------------------------------
# spectra

def _whitener(block: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit-determinant ``S`` with ``S X S^T = sqrt(det X) I`` for a 2x2 SPD ``X``."""
    d = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    if not (d > 0 and block[0, 0] > 0):
        raise DomainError("local block of the covariance matrix is not positive definite")
    r = math.sqrt(d)
    root = (block + r * I2) / math.sqrt(block[0, 0] + block[1, 1] + 2 * r)  # sqrt(X)
    inv_root = np.array([[root[1, 1], -root[0, 1]], [-root[1, 0], root[0, 0]]]) / r
    return math.sqrt(r) * inv_root, r


def symplectic_spectrum_two_mode(cm) -> np.ndarray:
    """Closed-form two-mode symplectic spectrum ``[nu_plus, nu_minus]``.

    ``nu_pm^2 = (Delta +- sqrt(Delta^2 - 4 det V)) / 2`` with
    ``Delta = det A + det B + 2 det C``. The invariants are evaluated in the
    local normal form ``A = a I, B = b I, C = diag(c1, c2)``, reached by
    unit-determinant whitening of each block and a singular-value
    decomposition of the transformed correlation block. There the
    discriminant factorises as ``(a^2 - b^2)^2 + 4 (a c1 + b c2)(a c2 + b c1)``,
    which stays accurate when the two eigenvalues nearly coincide. The
    smaller root is taken as ``det V / nu_plus^2`` to avoid cancellation when
    they are far apart.
    """
    v = _as_cm(cm)
    if v.shape != (4, 4):
        raise DomainError(f"expected a two-mode (4x4) CM, got shape {v.shape}")
    sa, a = _whitener(v[:2, :2])
    sb, b = _whitener(v[2:, 2:])
    c_norm = sa @ v[:2, 2:] @ sb.T
    s1, s2 = np.linalg.svd(c_norm, compute_uv=False)
    det_c = c_norm[0, 0] * c_norm[1, 1] - c_norm[0, 1] * c_norm[1, 0]
    c1, c2 = s1, math.copysign(s2, det_c)
    delta = a * a + b * b + 2.0 * c1 * c2
    det = (a * b - c1 * c1) * (a * b - c2 * c2)
    disc = ((a - b) * (a + b)) ** 2 + 4.0 * (a * c1 + b * c2) * (a * c2 + b * c1)
    if disc < 0.0:
        if disc < -1e-10 * delta * delta:
            raise NumericalError(f"two-mode invariants inconsistent: Delta^2 - 4 det V = {disc:.3e}")
        disc = 0.0
    plus2 = (delta + math.sqrt(disc)) / 2.0
    if plus2 <= 0.0:
        raise NumericalError("non-positive symplectic invariant")
    minus2 = det / plus2
    return np.sqrt([plus2, max(minus2, 0.0)])


def symplectic_spectrum_bruteforce(cm) -> np.ndarray:
    """Symplectic spectrum from the moduli of the eigenvalues of ``i Omega V``.

    Evaluated through the similar Hermitian matrix ``i V^1/2 Omega V^1/2``
    (same eigenvalues), whose real spectrum comes in +-nu pairs. Works for any
    number of modes and serves as the reference for the closed forms.
    """
    v = _as_cm(cm)
    n = n_modes(v)
    w, u = np.linalg.eigh(v)
    if np.any(w <= 0.0):
        raise DomainError("covariance matrix is not positive definite")
    root = (u * np.sqrt(w)) @ u.T
    ev = np.linalg.eigvalsh(1j * root @ symplectic_form(n) @ root)
    return np.sort(np.abs(ev))[::-1][::2].copy()


def von_neumann_entropy(spectrum) -> float:
    """Entropy in bits of a Gaussian state from its symplectic spectrum."""
    return float(np.sum(entropy_h(np.asarray(spectrum, dtype=float))))
