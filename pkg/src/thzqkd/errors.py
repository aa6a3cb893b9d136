"""Exception hierarchy shared by all modules."""


class ThzQkdError(Exception):
    """Base class for all package errors."""


class DomainError(ThzQkdError, ValueError):
    """An argument lies outside the physical domain of an operation."""


class UnresolvedBandError(ThzQkdError, LookupError):
    """A frequency is not covered by any band of an attenuation table."""


class NumericalError(ThzQkdError, ArithmeticError):
    """A numerical procedure failed (degeneracy, singularity, instability)."""


class SingularResponseError(NumericalError):
    """The converter resolvent ``M + i*omega*1`` is numerically singular."""


class UnstableDynamicsError(NumericalError):
    """The drift matrix has an eigenvalue with non-negative real part."""
