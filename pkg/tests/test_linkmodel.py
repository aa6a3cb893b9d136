import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thzqkd import linkmodel as lm
from thzqkd.errors import DomainError, UnresolvedBandError
from thzqkd.keyrate import ProtocolParams, rate_finite_modulation, secret_key_rate
from thzqkd.physkit import frequency_from_variance, v0_of


def rate_at(f, T, eta, mode="RR", policy="optimize"):
    return secret_key_rate(ProtocolParams(v0=v0_of(f), T=T, eta=eta), mode, policy).rate


def rate_at_cm(f, T, eta):
    v0 = v0_of(f)
    return rate_finite_modulation(ProtocolParams(v0=v0, T=T, eta=eta, S=v0)).rate


# --- attenuation table -----------------------------------------------------------

@pytest.mark.parametrize(
    "f,delta",
    [(30e12, 50.0), (100e9, 0.6), (200e9, 1.2), (1e12, 100.0), (10e12, 1e3), (15e12, 50.0), (34e12, 50.0), (45e12, 1.77e3)],
)
def test_default_table_values(f, delta):
    assert lm.attenuation_db_per_km(f) == delta


@pytest.mark.parametrize("f", [5e12, 150e9, 36e12, 60e12, 1e9])
def test_untabulated_frequency_is_an_error(f):
    with pytest.raises(UnresolvedBandError):
        lm.attenuation_db_per_km(f)


def test_unresolved_band_is_a_lookup_error():
    with pytest.raises(LookupError):
        lm.DEFAULT_TABLE(5e12)


def test_csv_table(tmp_path):
    path = tmp_path / "wet.csv"
    path.write_text("# rainy day\nf_min_hz,f_max_hz,delta_db_per_km\n1e12,5e12,300\n2.5e13,3.5e13,80\n")
    table = lm.AttenuationTable.from_csv(path)
    assert table(3e12) == 300.0
    assert table(30e12) == 80.0
    with pytest.raises(UnresolvedBandError):
        table(10e12)


def test_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("lo,hi,delta\n1,2,3\n")
    with pytest.raises(DomainError):
        lm.AttenuationTable.from_csv(path)


@pytest.mark.parametrize(
    "rows",
    [[(1e12, 3e12, 5.0), (2e12, 4e12, 6.0)], [(1e12, 2e12, 0.0)], [(3e12, 2e12, 1.0)], [(1e12, 2e12, -1.0)]],
)
def test_invalid_tables(rows):
    with pytest.raises(DomainError):
        lm.AttenuationTable.from_rows(rows)


# --- distance and transmissivity -------------------------------------------------

def test_transmissivity_examples():
    assert lm.transmissivity_from_distance(0.0, 50.0) == 1.0
    assert lm.transmissivity_from_distance(200.0, 50.0) == pytest.approx(0.1, rel=1e-15)
    assert lm.transmissivity_from_distance(4.0, 0.6) == pytest.approx(10 ** (-0.6 * 0.004 / 10), rel=1e-15)
    assert lm.transmissivity_from_distance(4.0, 0.6) == pytest.approx(0.99945, abs=1e-5)


def test_negative_distance_rejected():
    with pytest.raises(DomainError):
        lm.transmissivity_from_distance(-1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 1e5), st.floats(0.01, 2e3))
def test_round_trip(d, delta):
    # below ~0.01 dB total loss T rounds to within a few ulps of 1 and the
    # distance cannot be recovered to 1e-12 from a double
    loss_db = delta * d / 1000.0
    assume(1e-2 <= loss_db <= 3000.0)
    T = lm.transmissivity_from_distance(d, delta)
    assert lm.distance_from_transmissivity(T, delta) == pytest.approx(d, rel=1e-12)


def test_round_trip_precision_near_unit_transmissivity():
    T = lm.transmissivity_from_distance(1.0, 0.125)
    assert lm.distance_from_transmissivity(T, 0.125) == pytest.approx(1.0, rel=1e-10)


# --- thresholds ---------------------------------------------------------------------

def test_dr_has_no_threshold_below_half_transmissivity():
    for T in (0.1, 0.3, 0.5):
        assert lm.security_threshold_frequency(T, 1.0, "DR", "unit").status == "none"


def test_rr_lossy_detector_at_low_transmissivity():
    res = lm.security_threshold_frequency(0.1, 0.1, "RR")
    assert res.status == "root"
    assert math.isfinite(res.frequency) and res.frequency > 0


def test_rr_ideal_threshold_against_dense_scan():
    res = lm.security_threshold_frequency(0.5, 1.0, "RR")
    fs = np.geomspace(lm.F_MIN, lm.F_MAX, 10_000)
    signs = np.array([rate_at(f, 0.5, 1.0) > 0 for f in fs])
    first = int(np.argmax(signs))
    assert not signs[:first].any() and signs[first:].all()
    assert fs[first - 1] <= res.frequency <= fs[first]


@pytest.mark.parametrize(
    "T,eta,mode,policy",
    [(0.1, 0.1, "RR", "optimize"), (0.5, 1.0, "RR", "optimize"), (0.8, 0.1, "RR", "match-v0"), (0.95, 0.1, "DR", "optimize"), (0.7, 1.0, "DR", "unit")],
)
def test_threshold_consistency(T, eta, mode, policy):
    res = lm.security_threshold_frequency(T, eta, mode, policy)
    assert res.status == "root" and not res.multiple
    f = res.frequency
    assert rate_at(1.01 * f, T, eta, mode, policy) > 0
    assert rate_at(0.99 * f, T, eta, mode, policy) < 0


def test_threshold_below_bracket():
    # cold environment: even 10 GHz preparation noise is tolerable
    res = lm.security_threshold_frequency(0.9, 1.0, "RR", temperature=0.1)
    assert res.status == "below-bracket" and res.frequency == lm.F_MIN


@pytest.mark.parametrize("T,eta", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.5)])
def test_threshold_domain(T, eta):
    with pytest.raises(DomainError):
        lm.security_threshold_frequency(T, eta)


def test_plob_threshold_examples():
    assert lm.plob_threshold_frequency(0.5) == pytest.approx(frequency_from_variance(3.0), rel=1e-15)
    assert lm.plob_threshold_frequency(0.0) == math.inf
    assert lm.plob_threshold_frequency(1.0) == 0.0
    near = [lm.plob_threshold_frequency(T) for T in (1e-2, 1e-4, 1e-6)]
    assert near[0] < near[1] < near[2]
    far = [lm.plob_threshold_frequency(T) for T in (0.99, 0.9999, 0.999999)]
    assert far[0] > far[1] > far[2]


def test_threshold_ordering_and_monotonicity():
    Ts = np.linspace(0.05, 0.95, 10)
    ideal = lm.threshold_curve(Ts, 1.0, "RR").frequency
    lossy = lm.threshold_curve(Ts, 0.1, "RR", "match-v0").frequency
    plob = np.array([lm.plob_threshold_frequency(T) for T in Ts])
    assert np.all(np.isfinite(ideal)) and np.all(np.isfinite(lossy))
    assert np.all(plob <= ideal) and np.all(plob <= lossy)
    for curve in (plob, ideal, lossy):
        assert np.all(np.diff(curve) <= 0)


def test_lossy_dr_threshold_sits_above_rr():
    Ts = np.array([0.92, 0.95])
    dr = lm.threshold_curve(Ts, 0.1, "DR").frequency
    assert np.all(np.isfinite(dr))
    assert np.all(lm.threshold_curve(Ts, 1.0, "RR").frequency <= dr)
    assert np.all(lm.threshold_curve(Ts, 0.1, "RR").frequency <= dr)


def test_ideal_dr_overtakes_rr_at_high_transmissivity():
    rr = lm.threshold_curve([0.6, 0.95], 1.0, "RR").frequency
    dr = lm.threshold_curve([0.6, 0.95], 1.0, "DR", "unit").frequency
    assert rr[0] < dr[0]
    assert dr[1] < rr[1]


@pytest.mark.parametrize("T", [0.05, 0.5, 0.95])
def test_matched_trusted_noise_lowers_rr_threshold(T):
    # a 10% detector with S = V0 beats an ideal detector in RR: the trusted
    # noise decorrelates the outcome from Eve. Both rate routes agree.
    ideal = lm.security_threshold_frequency(T, 1.0, "RR").frequency
    lossy = lm.security_threshold_frequency(T, 0.1, "RR", "match-v0").frequency
    assert 0.85 * ideal < lossy < ideal

    def cm_rate(f):
        return rate_at_cm(f, T, 0.1)

    assert cm_rate(lossy * 1.001) > 0 > cm_rate(lossy * 0.999)
    assert cm_rate(0.5 * (lossy + ideal)) > 0


def test_dr_threshold_curves_only_above_half():
    Ts = np.linspace(0.05, 0.95, 19)
    for eta, policy in ((1.0, "unit"), (0.1, "optimize")):
        curve = lm.threshold_curve(Ts, eta, "DR", policy).frequency
        finite = np.isfinite(curve)
        assert not finite[Ts <= 0.5].any()
        assert finite.any()
        assert np.all(np.diff(curve[finite]) <= 0)


# --- maximum distance --------------------------------------------------------------

def test_rr_distance_at_30thz():
    res = lm.max_distance(30e12, 0.1, "RR")
    assert res.secure and not res.capped
    assert res.distance == pytest.approx(220, abs=15)
    assert res.delta == 50.0


def test_dr_distances():
    assert lm.max_distance(30e12, 0.1, "DR", "unit").distance == pytest.approx(7, abs=1.5)
    assert lm.max_distance(100e9, 0.1, "DR", "unit").distance == pytest.approx(4, abs=0.7)


def test_distance_is_the_rate_root():
    res = lm.max_distance(30e12, 0.1, "RR")
    T = lm.transmissivity_from_distance(res.distance, 50.0)
    assert abs(rate_at(30e12, T, 0.1)) < 1e-9
    assert rate_at(30e12, lm.transmissivity_from_distance(0.99 * res.distance, 50.0), 0.1) > 0


def test_insecure_at_origin():
    # output injection: the excess diverges as the channel becomes lossless
    res = lm.max_distance(30e12, 0.1, "RR", extra_noise=1.0, injection="output")
    assert res == lm.DistanceResult(0.0, False, 50.0)


def test_capped_distance():
    res = lm.max_distance(30e12, 1.0, "RR", delta=1e-6)
    assert res.capped and res.distance == lm.D_MAX


def test_delta_override_skips_table():
    res = lm.max_distance(5e12, 0.1, "RR", delta=50.0)
    assert res.delta == 50.0 and res.secure
    with pytest.raises(UnresolvedBandError):
        lm.max_distance(5e12, 0.1, "RR")


def test_distance_non_increasing_in_attenuation():
    ds = [lm.max_distance(30e12, 0.1, "RR", delta=dl).distance for dl in (10.0, 50.0, 200.0, 1000.0)]
    assert all(b <= a for a, b in zip(ds, ds[1:]))


@pytest.mark.parametrize("injection", ["input", "output"])
def test_distance_non_increasing_in_extra_noise(injection):
    ds = [lm.max_distance(30e12, 0.1, "RR", extra_noise=n, injection=injection).distance for n in (0.0, 0.1, 1.0, 3.44, 10.0)]
    assert all(b <= a for a, b in zip(ds, ds[1:]))


@pytest.mark.parametrize("f,policy", [(30e12, "unit"), (30e12, "optimize"), (100e9, "unit")])
def test_dr_distance_non_decreasing_in_efficiency(f, policy):
    ds = [lm.max_distance(f, eta, "DR", policy).distance for eta in (0.05, 0.1, 0.3, 0.6, 1.0)]
    assert all(b >= a for a, b in zip(ds, ds[1:]))
