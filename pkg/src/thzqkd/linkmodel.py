"""
Atmospheric link budget and security-threshold solvers.

Frequencies are ordinary frequencies in Hz, distances in metres, attenuation
in dB/km.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, UnresolvedBandError
from .keyrate import ProtocolParams, inject_excess_noise, secret_key_rate
from .physkit import ROOM_TEMPERATURE, frequency_from_variance, preparation_variance

F_MIN = 10e9
F_MAX = 1000e12
D_MAX = 100e3
SCAN_POINTS = 256
# spot entries (f_min == f_max) match within this relative width
SPOT_RTOL = 1e-9


@dataclass(frozen=True)
class Band:
    f_min: float
    f_max: float
    delta: float

    def contains(self, f: float) -> bool:
        return self.f_min * (1 - SPOT_RTOL) <= f <= self.f_max * (1 + SPOT_RTOL)


@dataclass(frozen=True)
class AttenuationTable:
    """Piecewise-constant attenuation; frequencies outside every band are errors."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        ordered = sorted(self.bands, key=lambda b: b.f_min)
        for b in ordered:
            if not (0 < b.f_min <= b.f_max):
                raise DomainError(f"invalid band [{b.f_min}, {b.f_max}]")
            if not (b.delta > 0):
                raise DomainError(f"attenuation must be positive, got {b.delta}")
        for lo, hi in zip(ordered, ordered[1:]):
            if hi.f_min <= lo.f_max:
                raise DomainError(f"overlapping bands at {hi.f_min:g} Hz")
        object.__setattr__(self, "bands", tuple(ordered))

    def __call__(self, frequency: float) -> float:
        for band in self.bands:
            if band.contains(frequency):
                return band.delta
        raise UnresolvedBandError(f"no attenuation band covers {frequency:g} Hz")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "AttenuationTable":
        return cls(tuple(Band(float(a), float(b), float(c)) for a, b, c in rows))

    @classmethod
    def from_csv(cls, path) -> "AttenuationTable":
        """Load a table with columns ``f_min_hz, f_max_hz, delta_db_per_km``."""
        with open(Path(path), newline="") as fh:
            lines = (ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))
            reader = csv.DictReader(lines)
            try:
                rows = [(r["f_min_hz"], r["f_max_hz"], r["delta_db_per_km"]) for r in reader]
            except KeyError as exc:
                raise DomainError(f"attenuation table is missing column {exc}") from None
        if not rows:
            raise DomainError(f"attenuation table {path} has no rows")
        return cls.from_rows(rows)


# clear-weather values: spot frequencies below 10 THz, bands in the mid infrared
DEFAULT_TABLE = AttenuationTable.from_rows(
    [
        (100e9, 100e9, 0.6),
        (200e9, 200e9, 1.2),
        (1e12, 1e12, 1e2),
        (10e12, 10e12, 1e3),
        (15e12, 34e12, 50.0),
        (40e12, 55e12, 1.77e3),
    ]
)


def attenuation_db_per_km(frequency: float, table: AttenuationTable = DEFAULT_TABLE) -> float:
    return table(frequency)


def transmissivity_from_distance(d: float, delta: float) -> float:
    """``T = 10^(-delta d / 10)`` with ``d`` in metres and ``delta`` in dB/km."""
    if not (d >= 0):
        raise DomainError(f"distance must be >= 0, got {d!r}")
    return 10.0 ** (-delta * (d / 1000.0) / 10.0)


def distance_from_transmissivity(T: float, delta: float) -> float:
    if not (0 < T <= 1):
        raise DomainError(f"transmissivity must lie in (0, 1], got {T!r}")
    return -10.0 * math.log10(T) / delta * 1000.0


# ---------------------------------------------------------------------------
# thresholds

@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of a frequency-threshold search.

    ``status`` is ``"root"`` when a sign change was bracketed, ``"none"`` when
    the rate is never positive in the bracket, and ``"below-bracket"`` when it
    is already positive at the lowest frequency (``frequency`` is then F_MIN).
    """

    frequency: float | None
    status: str
    roots: tuple[float, ...] = ()

    @property
    def multiple(self) -> bool:
        return len(self.roots) > 1


@dataclass(frozen=True)
class ThresholdCurve:
    T: np.ndarray
    frequency: np.ndarray  # nan where no threshold exists
    mode: str
    eta: float
    trusted_noise: str


def _rate_at_frequency(f, T, eta, mode, trusted_noise, temperature, extra_noise=0.0, injection="input"):
    v0 = preparation_variance(f, temperature).v0
    p = inject_excess_noise(ProtocolParams(v0=v0, T=T, eta=eta), extra_noise, injection)
    return secret_key_rate(p, mode, trusted_noise).rate


def security_threshold_frequency(
    T: float,
    eta: float,
    mode: str = "RR",
    trusted_noise: str = "optimize",
    temperature: float = ROOM_TEMPERATURE,
    extra_noise: float = 0.0,
) -> ThresholdResult:
    """Minimum frequency above which the selected rate is positive, under the
    hiding attack ``W = V0(f)``.

    A log-spaced coarse scan over [10 GHz, 1000 THz] locates sign changes, each
    refined by Brent's method in log-frequency.
    """
    if not (0 < T < 1):
        raise DomainError(f"transmissivity must lie in (0, 1), got {T!r}")
    if not (0 < eta <= 1):
        raise DomainError(f"eta must lie in (0, 1], got {eta!r}")

    def g(logf):
        return _rate_at_frequency(math.exp(logf), T, eta, mode, trusted_noise, temperature, extra_noise)

    grid = np.linspace(math.log(F_MIN), math.log(F_MAX), SCAN_POINTS)
    vals = np.array([g(x) for x in grid])
    if vals[0] > 0:
        return ThresholdResult(F_MIN, "below-bracket")
    roots = []
    for i in range(SCAN_POINTS - 1):
        if vals[i] <= 0 < vals[i + 1]:
            x = brentq(g, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(math.exp(x))
    if not roots:
        return ThresholdResult(None, "none")
    return ThresholdResult(roots[0], "root", tuple(roots))


def threshold_curve(
    Ts: Iterable[float],
    eta: float,
    mode: str = "RR",
    trusted_noise: str = "optimize",
    temperature: float = ROOM_TEMPERATURE,
) -> ThresholdCurve:
    Ts = np.asarray(list(Ts), dtype=float)
    freqs = []
    for T in Ts:
        res = security_threshold_frequency(T, eta, mode, trusted_noise, temperature)
        freqs.append(math.nan if res.frequency is None else res.frequency)
    return ThresholdCurve(Ts, np.array(freqs), mode, eta, trusted_noise)


def plob_threshold_frequency(T: float, temperature: float = ROOM_TEMPERATURE) -> float:
    """Frequency at which the PLOB bound closes: ``nbar = T / (1 - T)``.

    The threshold variance ``V0 = (1 + T) / (1 - T)`` is mapped to Hz through
    the inverse Planck relation.
    """
    if not (0 <= T <= 1):
        raise DomainError(f"transmissivity must lie in [0, 1], got {T!r}")
    if T == 0:
        return math.inf
    if T == 1:
        return 0.0
    return frequency_from_variance((1.0 + T) / (1.0 - T), temperature)


# ---------------------------------------------------------------------------
# distances

@dataclass(frozen=True)
class DistanceResult:
    distance: float  # metres
    secure: bool
    delta: float  # dB/km used
    capped: bool = False  # still secure at D_MAX


def max_distance(
    frequency: float,
    eta: float,
    mode: str = "RR",
    trusted_noise: str = "optimize",
    extra_noise: float = 0.0,
    injection: str = "input",
    table: AttenuationTable = DEFAULT_TABLE,
    temperature: float = ROOM_TEMPERATURE,
    delta: float | None = None,
) -> DistanceResult:
    """Largest distance (m) with a positive key rate.

    ``extra_noise`` (SNU) is Eve-controlled excess variance, folded into the
    attack variance according to ``injection``. ``delta`` overrides the table
    lookup.
    """
    if delta is None:
        delta = table(frequency)
    v0 = preparation_variance(frequency, temperature).v0

    def rate(d):
        T = transmissivity_from_distance(d, delta)
        p = inject_excess_noise(ProtocolParams(v0=v0, T=T, eta=eta), extra_noise, injection)
        return secret_key_rate(p, mode, trusted_noise).rate

    grid = np.geomspace(1e-6, D_MAX, SCAN_POINTS)
    vals = np.array([rate(d) for d in grid])
    if not vals[0] > 0:
        return DistanceResult(0.0, False, delta)
    positive = np.nonzero(vals > 0)[0]
    last = positive[-1]
    if last == SCAN_POINTS - 1:
        return DistanceResult(D_MAX, True, delta, capped=True)
    d = brentq(rate, grid[last], grid[last + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)
    return DistanceResult(d, True, delta)
