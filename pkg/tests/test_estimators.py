import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polardoa import (ArrayConfig, DegenerateDataError, EventDecision, MusicGrid, PhasePair,
                      SnapshotSet, SourceParams, ThresholdConfig, UnsupportedCombinationError,
                      baseline_music, cf_estimate, cmusic_method1, cmusic_method2, estimate,
                      f_matrix, phases_event1, phases_event2, steering_vector, synthesize)
from polardoa.harness import EVENT2_SCENARIO, OMEGA11_SCENARIO
from polardoa.model import noise_power_for_rsnr, omega1_source

from conftest import random_source

SIGNS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)


def separation_deg(theta1, phi1, theta2, phi2):
    """Great-circle angle between two arrival directions."""
    def unit(t, p):
        t, p = math.radians(t), math.radians(p or 0.0)
        return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])
    return math.degrees(math.acos(min(1.0, float(unit(theta1, phi1) @ unit(theta2, phi2)))))


def snapshots_from(e, k1, k2, m=6, seed=0):
    """Noiseless data for element voltages ``e`` and steering phases (k1, k2)."""
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    a = np.asarray(e) * np.exp(1j * SIGNS @ np.array([k1, k2]))
    return SnapshotSet(np.outer(a, s), 0.0)


def canonical_voltages(e_x, e_y):
    z = np.radians([0, 45, 90, 135])
    return e_x * np.cos(z) + e_y * np.sin(z)


def test_f_matrices():
    r = math.sqrt(0.5)
    assert np.allclose(f_matrix(1), np.diag([1, r, 1]))
    assert np.allclose(f_matrix(2), np.diag([1, -1, -r]))
    assert np.allclose(f_matrix(3), np.diag([1, math.sqrt(2), -math.sqrt(2)]))
    assert np.array_equal(f_matrix(4), f_matrix(1))
    with pytest.raises(ValueError):
        f_matrix(5)


@pytest.mark.parametrize("dead", [1, 2, 3, 4])
def test_weighting_equalizes_live_voltages(dead):
    rng = np.random.default_rng(dead)
    for _ in range(20):
        src = omega1_source(float(rng.uniform(1, 89)), float(rng.uniform(0, 360)), dead)
        e = steering_vector(ArrayConfig.canonical(), src).field_part
        live = np.delete(e, dead - 1)
        scaled = live.conj() * np.diag(f_matrix(dead))
        assert np.allclose(scaled, scaled[0], atol=1e-12)


def test_event1_phases_omega11():
    e = canonical_voltages(0.0, 0.8 - 0.3j)
    p = phases_event1(snapshots_from(e, 0.3, 0.4), 1, 0.0)
    assert (p.kappa1, p.kappa2) == pytest.approx((0.3, 0.4), abs=1e-12)


def test_event1_phases_omega13():
    e = canonical_voltages(0.6 + 0.2j, 0.0)
    p = phases_event1(snapshots_from(e, 0.5, -0.2), 3, 0.0)
    assert (p.kappa1, p.kappa2) == pytest.approx((0.5, -0.2), abs=1e-12)


@pytest.mark.parametrize("dead", [1, 2, 3, 4])
def test_event1_phases_zero_for_zenith(dead):
    src = omega1_source(60.0, 20.0, dead)
    snap = synthesize(ArrayConfig.canonical(), src.replace(theta=0.0), 10, 0.0, seed=1)
    p = phases_event1(snap, dead, 0.0)
    assert (p.kappa1, p.kappa2) == pytest.approx((0.0, 0.0), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(dead=st.integers(1, 4), theta=st.floats(1, 89), phi=st.floats(0, 359.9),
       seed=st.integers(0, 10 ** 6))
def test_event1_phases_exact_when_noiseless(dead, theta, phi, seed):
    arr = ArrayConfig.canonical()
    src = omega1_source(theta, phi, dead)
    k = 2 * math.pi * 0.2 * math.sin(math.radians(theta))
    p = phases_event1(synthesize(arr, src, 8, 0.0, seed=seed), dead, 0.0)
    assert p.kappa1 == pytest.approx(k * math.cos(math.radians(phi)), abs=1e-10)
    assert p.kappa2 == pytest.approx(k * math.sin(math.radians(phi)), abs=1e-10)


def test_event2_phases_circular_field():
    e = canonical_voltages(1.0, 1j)
    p = phases_event2(snapshots_from(e, 0.3, 0.4), 0.0)
    assert (p.kappa1, p.kappa2) == pytest.approx((0.3, 0.4), abs=1e-12)


def test_event2_equal_phases_give_zero_difference():
    e = canonical_voltages(0.7, 0.2 + 0.5j)
    p = phases_event2(snapshots_from(e, 0.25, 0.25), 0.0)
    assert p.kappa1 - p.kappa2 == pytest.approx(0.0, abs=1e-12)


def test_event2_phases_exact_over_random_sources():
    rng = np.random.default_rng(2)
    arr = ArrayConfig.canonical()
    for i in range(100):
        src = random_source(rng)
        k = 2 * math.pi * 0.2 * math.sin(math.radians(src.theta))
        p = phases_event2(synthesize(arr, src, 50, 0.0, "gaussian-unit", i), 0.0)
        assert p.kappa1 == pytest.approx(k * math.cos(math.radians(src.phi)), abs=1e-10)
        assert p.kappa2 == pytest.approx(k * math.sin(math.radians(src.phi)), abs=1e-10)


def test_phase_estimates_ignore_common_sample_phase():
    arr = ArrayConfig.canonical()
    snap = synthesize(arr, EVENT2_SCENARIO, 50, 0.01, seed=5)
    rot = np.exp(1j * np.random.default_rng(0).uniform(0, 2 * np.pi, 50))
    rotated = SnapshotSet(snap.samples * rot, snap.noise_power)
    a, b = phases_event2(snap, 0.0), phases_event2(rotated, 0.0)
    assert (a.kappa1, a.kappa2) == pytest.approx((b.kappa1, b.kappa2), abs=1e-12)


def test_cf_zero_phases():
    est = cf_estimate(PhasePair(0.0, 0.0), 0.2)
    assert est.theta_deg == 0.0 and est.phi_deg is None


def test_cf_reference_values():
    est = cf_estimate(PhasePair(0.0, 0.5), 0.2)
    assert est.phi_deg == pytest.approx(90.0)
    assert est.theta_deg == pytest.approx(math.degrees(math.asin(0.5 / (0.4 * math.pi))))
    assert est.theta_deg == pytest.approx(23.45, abs=5e-3)
    est = cf_estimate(PhasePair(0.3, 0.4), 0.2)
    assert est.phi_deg == pytest.approx(53.130, abs=1e-3)
    assert est.theta_deg == pytest.approx(23.45, abs=5e-3)


def test_cf_clamps_ratio_above_one():
    est = cf_estimate(PhasePair(2.0, 0.0), 0.2)
    assert est.theta_deg == 90.0 and est.phi_deg == 0.0


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0.5, 89.5), phi=st.floats(0, 359.99))
def test_cf_inverts_steering_phases(theta, phi):
    k = 2 * math.pi * 0.2 * math.sin(math.radians(theta))
    est = cf_estimate(PhasePair(k * math.cos(math.radians(phi)), k * math.sin(math.radians(phi))), 0.2)
    assert est.theta_deg == pytest.approx(theta, abs=1e-7)
    assert (est.phi_deg - phi + 180) % 360 - 180 == pytest.approx(0.0, abs=1e-7)
    assert 0 <= est.phi_deg < 360


def test_method1_noiseless_omega11():
    snap = synthesize(ArrayConfig.canonical(), OMEGA11_SCENARIO, 50, 0.0, seed=1)
    est = cmusic_method1(snap, 1)
    assert (est.theta_deg, est.phi_deg) == (71.0, 30.0)


def test_method2_noiseless_cases():
    arr = ArrayConfig.canonical()
    snap = synthesize(arr, EVENT2_SCENARIO, 50, 0.0, seed=1)
    est = cmusic_method2(snap, EventDecision(None), min_confidence=0.0)
    assert (est.theta_deg, est.phi_deg) == (10.0, 45.0)
    snap = synthesize(arr, OMEGA11_SCENARIO, 50, 0.0, seed=1)
    m2 = cmusic_method2(snap, EventDecision(1), min_confidence=0.0)
    m1 = cmusic_method1(snap, 1)
    assert (m2.theta_deg, m2.phi_deg) == (m1.theta_deg, m1.phi_deg)


def test_zenith_music_reports_no_azimuth():
    snap = synthesize(ArrayConfig.canonical(), SourceParams(0, 10, 40, 30), 20, 0.0, seed=3)
    est = cmusic_method2(snap, EventDecision(None), min_confidence=0.0)
    assert est.theta_deg == 0.0 and est.phi_deg is None


def test_music_grid_shape():
    g = MusicGrid()
    assert (g.theta_count, g.phi_count) == (91, 360)
    assert MusicGrid(2, 5).phi_count == 72
    with pytest.raises(ValueError):
        MusicGrid(0, 1)


def test_baseline_fails_with_skewed_dipoles():
    skew = ArrayConfig(4, 0.2, (0, 30, 60, 90))
    src = SourceParams(30, 60, 45, 45)
    est = baseline_music(synthesize(skew, src, 50, 0.0, seed=2), skew)
    assert max(abs(est.theta_deg - 30), abs(est.phi_deg - 60)) > 5


def test_baseline_recovers_with_identical_alignment():
    same = ArrayConfig(4, 0.2, (0, 0, 0, 0))
    src = SourceParams(30, 60, 45, 45)
    est = baseline_music(synthesize(same, src, 50, 0.0, seed=2), same)
    assert (est.theta_deg, est.phi_deg) == (30.0, 60.0)


def test_baseline_reports_all_dark_data():
    same = ArrayConfig(4, 0.2, (0, 0, 0, 0))
    snap = synthesize(same, SourceParams(45, 90, 90, 0), 50, 0.0, seed=2)
    assert not np.any(np.abs(snap.samples) > 1e-15)
    with pytest.raises(DegenerateDataError):
        baseline_music(SnapshotSet(np.zeros((4, 50), complex), 0.0), same)


@pytest.mark.parametrize("c", [3.0, 0.2j, -1.5 + 0.5j])
def test_estimates_invariant_to_complex_scale(c):
    snap = synthesize(ArrayConfig.canonical(), EVENT2_SCENARIO, 50, 0.0, seed=9)
    scaled = snap.scaled(c)
    for fn in (lambda s: cf_estimate(phases_event2(s, 0.0), 0.2),
               lambda s: cmusic_method2(s, EventDecision(None), min_confidence=0.0)):
        a, b = fn(snap), fn(scaled)
        assert a.theta_deg == pytest.approx(b.theta_deg, abs=1e-9)
        assert a.phi_deg == pytest.approx(b.phi_deg, abs=1e-9)


@pytest.mark.parametrize("scenario, label", [(OMEGA11_SCENARIO, "omega1,1"),
                                             (EVENT2_SCENARIO, "omega2")])
def test_pipeline_median_error_at_high_snr(scenario, label):
    arr = ArrayConfig.canonical()
    s2 = noise_power_for_rsnr(steering_vector(arr, scenario).compound, 20)
    cfg = ThresholdConfig(0.001, "exact-chi2", s2, 50)
    errs = []
    for seed in range(201):
        est = estimate(synthesize(arr, scenario, 50, s2, seed=seed), cfg, "cf")
        if seed == 0:
            assert est.event.label == label
        errs.append(separation_deg(est.theta_deg, est.phi_deg, scenario.theta, scenario.phi))
    assert np.median(errs) <= 1.0


def test_method1_rejected_for_event2():
    arr = ArrayConfig.canonical()
    snap = synthesize(arr, EVENT2_SCENARIO, 50, 0.001, seed=1)
    with pytest.raises(UnsupportedCombinationError):
        estimate(snap, ThresholdConfig(0.001, "exact-chi2", 0.001, 50), "cmusic-m1")


def test_estimate_rejects_unknown_algorithm_and_geometry():
    snap = synthesize(ArrayConfig.canonical(), EVENT2_SCENARIO, 50, 0.001, seed=1)
    cfg = ThresholdConfig(0.001, "exact-chi2", 0.001, 50)
    with pytest.raises(ValueError):
        estimate(snap, cfg, "esprit")
    with pytest.raises(ValueError):
        estimate(snap, cfg, "cf", array=ArrayConfig(4, 0.2, (0, 30, 60, 90)))


def test_noise_only_input_signals_failure():
    rng = np.random.default_rng(17)
    flagged = 0
    for i in range(100):
        w = (rng.standard_normal((4, 50)) + 1j * rng.standard_normal((4, 50))) / math.sqrt(2)
        snap = SnapshotSet(w, 1.0)
        cfg = ThresholdConfig(0.001, "exact-chi2", 1.0, 50)
        try:
            estimate(snap, cfg, "cf")
        except DegenerateDataError:
            flagged += 1
    assert flagged >= 95


def test_event_passthrough_is_respected():
    arr = ArrayConfig.canonical()
    snap = synthesize(arr, OMEGA11_SCENARIO, 50, 0.0, seed=1)
    cfg = ThresholdConfig(0.001, "exact-chi2", 1e-9, 50)
    est = estimate(snap, cfg, "cmusic-m1", event=EventDecision(1))
    assert est.event.dead == 1 and (est.theta_deg, est.phi_deg) == (71.0, 30.0)
