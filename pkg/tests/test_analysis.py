import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from statransport.analysis import (FitError, decaying_sine, extract_sloshing, fit_decaying_sine, tof_phase_shift,
                                   tof_prefactor)
from statransport.potential import TrapConfig
from statransport.simulator import default_wait_grid, stop_and_probe_scan
from statransport.sloshing import sloshing_residual
from statransport.trajectory import TransportRequest, build_trap_plan

OMEGA = 2 * math.pi * 7.08


def test_prefactor_values():
    assert tof_prefactor(OMEGA, 0.0) == 1.0
    assert tof_prefactor(OMEGA, 0.0, 0.175) == 1.0
    assert tof_prefactor(OMEGA, 0.012, 0.175) == pytest.approx(math.hypot(1 - 0.012 / 0.175, OMEGA * 0.012))
    with pytest.raises(ValueError):
        tof_prefactor(OMEGA, 0.012, 0.0)


def test_model_is_propagated_in_situ_oscillation():
    t = np.linspace(0, 0.3, 51)
    a, tau, phi, te = 2e-5, 0.2, 0.7, 0.012
    z = a * np.sin(OMEGA * t + phi) * np.exp(-t / tau)
    exact_v = a * np.exp(-t / tau) * (OMEGA * np.cos(OMEGA * t + phi) - np.sin(OMEGA * t + phi) / tau)
    assert np.allclose(decaying_sine(t, a, 1 / tau, OMEGA, phi, te), z + te * exact_v, rtol=0, atol=1e-18)
    fine = np.linspace(0, 0.3, 30001)
    v = np.gradient(a * np.sin(OMEGA * fine + phi) * np.exp(-fine / tau), fine, edge_order=2)
    assert np.max(np.abs(v[::600] - exact_v)) < 1e-5 * a * OMEGA
    # the amplitude-phase form quoted in the module docstring
    pref, shift = tof_prefactor(OMEGA, te, tau), tof_phase_shift(OMEGA, te, tau)
    alt = a * pref * np.sin(OMEGA * t + phi + shift) * np.exp(-t / tau)
    assert np.allclose(alt, decaying_sine(t, a, 1 / tau, OMEGA, phi, te), rtol=0, atol=1e-18)


@settings(max_examples=25, deadline=None)
@given(st.floats(5e-6, 3e-4), st.floats(0.08, 2.0), st.floats(0, 2 * math.pi), st.integers(0, 10**6))
def test_fit_recovers_parameters(amp, tau, phi, seed):
    rng = np.random.default_rng(seed)
    t = np.repeat(np.linspace(0, 0.3, 31), 3)
    sigma = 0.01 * amp
    z = decaying_sine(t, amp, 1 / tau, OMEGA, phi, 0.012) + rng.normal(0, sigma, t.size)
    fit = fit_decaying_sine(t, z, np.full(t.size, sigma), t_e=0.012)
    assert abs(fit.amplitude - amp) < 6 * fit.amplitude_sigma + 1e-3 * amp
    assert abs(fit.omega - OMEGA) < 6 * fit.omega_sigma + 1e-6 * OMEGA
    dphi = (fit.phi - phi + math.pi) % (2 * math.pi) - math.pi
    assert abs(dphi) < 6 * fit.phi_sigma + 1e-6
    assert fit.chi2_history == sorted(fit.chi2_history, reverse=True)


def test_fit_exact_data_and_dict():
    t = np.linspace(0, 0.28, 40)
    z = decaying_sine(t, 1e-4, 1 / 0.175, OMEGA, 2.0, 0.012)
    fit = fit_decaying_sine(t, z, t_e=0.012)
    assert fit.amplitude == pytest.approx(1e-4, rel=1e-7)
    assert fit.tau == pytest.approx(0.175, rel=1e-6)
    assert fit.apparent_amplitude == pytest.approx(1e-4 * tof_prefactor(OMEGA, 0.012, 0.175), rel=1e-6)
    d = fit.to_dict()
    assert d["in_situ_amplitude_m"] == d["amplitude_m"]
    assert np.allclose(fit.predict(t), z, rtol=0, atol=1e-12)


def test_fixed_frequency_and_no_decay():
    t = np.linspace(0, 0.28, 33)
    z = decaying_sine(t, 3e-5, 0.0, OMEGA, 1.0)
    fit = fit_decaying_sine(t, z, omega=OMEGA, tau=np.inf)
    assert fit.omega == OMEGA and fit.tau == math.inf
    assert fit.sigmas[1] == 0.0 and fit.sigmas[2] == 0.0
    assert fit.amplitude == pytest.approx(3e-5, rel=1e-9)
    assert fit.to_dict()["tau_s"] == "inf"


def test_negative_amplitude_is_folded_into_phase():
    t = np.linspace(0, 0.28, 33)
    fit = fit_decaying_sine(t, -decaying_sine(t, 3e-5, 0.0, OMEGA, 1.0), omega=OMEGA, tau=np.inf)
    assert fit.amplitude > 0
    assert fit.phi == pytest.approx((1.0 + math.pi) % (2 * math.pi))


def test_fit_errors():
    t = np.linspace(0, 0.28, 20)
    with pytest.raises(ValueError):
        fit_decaying_sine(t[:5], t[:5])
    with pytest.raises(FitError):
        fit_decaying_sine(t, np.zeros_like(t))
    with pytest.raises(ValueError):
        fit_decaying_sine(t, np.sin(OMEGA * t), sigma=np.zeros_like(t))
    short = np.linspace(0, 0.01, 10)
    with pytest.raises(ValueError):
        fit_decaying_sine(short, np.sin(OMEGA * short), omega=OMEGA)


def test_extract_sloshing_matches_residual_phasor():
    omega0 = 2 * math.pi * 7.16
    cfg = TrapConfig.from_axial_frequency(omega0)
    plan = build_trap_plan("quintic-trap", TransportRequest(1.29e-3, 0.186, omega0))
    data = stop_and_probe_scan(plan, cfg, "harmonic", default_wait_grid(omega0), 0.012, repetitions=1)
    res, fit = extract_sloshing(data)
    ref = sloshing_residual(plan, omega0).residual
    assert abs(res.residual - ref) < 1e-6 * abs(ref)
    assert fit.omega == pytest.approx(omega0, rel=1e-7)


REFERENCE_FIT = dict(amp=206e-6, tau=0.175, omega=2 * math.pi * 7.08, phi=math.radians(133), t_e=0.012)


def _protocol_times(omega):
    return np.repeat(np.linspace(0, 2 * 2 * math.pi / omega, 11), 3)


def test_noiseless_reference_parameters_recovered_exactly():
    p = REFERENCE_FIT
    t = _protocol_times(p["omega"])
    z = decaying_sine(t, p["amp"], 1 / p["tau"], p["omega"], p["phi"], p["t_e"])
    fit = fit_decaying_sine(t, z, t_e=p["t_e"])
    assert fit.amplitude == pytest.approx(p["amp"], rel=1e-8)
    assert fit.tau == pytest.approx(p["tau"], rel=1e-8)
    assert fit.omega == pytest.approx(p["omega"], rel=1e-8)
    assert fit.phi == pytest.approx(p["phi"], rel=1e-8)


def test_round_trip_over_random_parameter_draws():
    rng = np.random.default_rng(100)
    for _ in range(100):
        amp, tau = rng.uniform(5e-6, 3e-4), rng.uniform(0.1, 1.0)
        omega, phi = 2 * math.pi * rng.uniform(6.5, 7.6), rng.uniform(0, 2 * math.pi)
        t_e = rng.uniform(0, 0.015)
        t = _protocol_times(omega)
        fit = fit_decaying_sine(t, decaying_sine(t, amp, 1 / tau, omega, phi, t_e), t_e=t_e)
        assert fit.amplitude == pytest.approx(amp, rel=1e-7)
        assert fit.gamma == pytest.approx(1 / tau, rel=1e-6)
        assert fit.omega == pytest.approx(omega, rel=1e-8)
        assert abs((fit.phi - phi + math.pi) % (2 * math.pi) - math.pi) < 1e-7


def test_null_signal_consistent_with_zero():
    # |A|/sigma of pure noise is Rayleigh distributed: P(< 2) = 1 - exp(-2) = 0.865
    t = _protocol_times(REFERENCE_FIT["omega"])
    inside = 0
    for seed in range(200):
        z = np.random.default_rng(seed).normal(0, 1e-7, t.size)
        fit = fit_decaying_sine(t, z, 1e-7, t_e=0.012, omega=REFERENCE_FIT["omega"], tau=np.inf)
        inside += fit.amplitude < 2 * fit.amplitude_sigma
    assert inside >= 160


def test_confidence_interval_coverage():
    p = REFERENCE_FIT
    t = _protocol_times(p["omega"])
    truth = decaying_sine(t, p["amp"], 1 / p["tau"], p["omega"], p["phi"], p["t_e"])
    hits = np.zeros(4, dtype=int)
    true_vec = np.array([p["amp"], 1 / p["tau"], p["omega"], p["phi"]])
    for seed in range(100):
        z = truth + np.random.default_rng(seed).normal(0, 5e-6, t.size)
        fit = fit_decaying_sine(t, z, 5e-6, t_e=p["t_e"])
        est = np.array([fit.amplitude, fit.gamma, fit.omega, fit.phi])
        diff = est - true_vec
        diff[3] = (diff[3] + math.pi) % (2 * math.pi) - math.pi
        hits += np.abs(diff) <= 1.96 * fit.sigmas
    assert np.all(hits >= 90), hits


def test_prefactor_undamped_and_monotone():
    assert tof_prefactor(2 * math.pi * 7.16, 0.012) == pytest.approx(1.136, abs=5e-4)
    te = np.linspace(0, 1 / OMEGA, 50)
    values = [tof_prefactor(OMEGA, x) for x in te]
    assert values[0] == 1.0 and all(b > a for a, b in zip(values, values[1:]))


def test_covariance_is_symmetric_psd():
    p = REFERENCE_FIT
    t = _protocol_times(p["omega"])
    z = decaying_sine(t, p["amp"], 1 / p["tau"], p["omega"], p["phi"], p["t_e"])
    z = z + np.random.default_rng(1).normal(0, 2e-6, t.size)
    fit = fit_decaying_sine(t, z, t_e=p["t_e"])
    cov = fit.covariance
    assert np.allclose(cov, cov.T) and np.min(np.linalg.eigvalsh(cov)) >= -1e-20
    assert fit.tau > 0 and fit.amplitude >= 0
