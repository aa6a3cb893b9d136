"""Thermal-state continuous-variable QKD at terahertz frequencies.

Modules
-------
physkit    Planck occupation, preparation variance, bosonic entropy
gaussian   covariance matrices, homodyne conditioning, symplectic spectra
keyrate    DR/RR key rates, finite-modulation route, PLOB bound
linkmodel  atmospheric attenuation, threshold frequencies, maximum distance
converter  opto-mechanical THz/optical converter response and noise
cli        command-line sweeps
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    NumericalError,
    SingularResponseError,
    ThzQkdError,
    UnresolvedBandError,
    UnstableDynamicsError,
)
from .keyrate import ProtocolParams, plob_bound, secret_key_rate  # noqa: E402
from .physkit import entropy_h, preparation_variance  # noqa: E402

__all__ = [
    "DomainError",
    "NumericalError",
    "ProtocolParams",
    "SingularResponseError",
    "ThzQkdError",
    "UnresolvedBandError",
    "UnstableDynamicsError",
    "entropy_h",
    "plob_bound",
    "preparation_variance",
    "secret_key_rate",
]
