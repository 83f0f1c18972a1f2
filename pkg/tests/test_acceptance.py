"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured value and
the pinned tolerance before asserting. Run directly with
``python3 tests/test_acceptance.py`` for the summary alone.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy.integrate import simpson

from statransport import (CorrectionParams, IntegratorConfig, ParticleState, TrapConfig, TransportRequest,
                          apply_correction, build_trap_plan, check_boundaries, extract_sloshing,
                          find_zero_durations, fit_decaying_sine, frequency_ratio,
                          frequency_sensitivity_sweep, integrate, sample_thermal_ensemble,
                          simulate_transport, sloshing_residual, solve_correction, static_plan,
                          stop_and_probe_scan, temperature_for_spread, tof_prefactor)
from statransport.potential import EnsembleMoments, axial_potential
from statransport.simulator import default_wait_grid, final_amplitude
from statransport.trajectory import septic_plan

pytestmark = pytest.mark.acceptance

F0 = 7.16
OMEGA0 = 2 * math.pi * F0
D = 1.29e-3
TF = 0.186
REQ = TransportRequest(D, TF, OMEGA0)
CFG = TrapConfig.from_axial_frequency(OMEGA0)
# correction frequency used in the experiment
OMEGA_C = 2 * math.pi * 7.11


def report(number, name, passed, detail):
    print(f"{'PASS' if passed else 'FAIL'} [{number}] {name}: {detail}")
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def test_criterion_1_zero_sloshing_durations():
    expected = {"sine": ([1.5, 2.5, 3.5], (1.2, 3.8), 1e-4),
                "triangular": ([2.0, 4.0, 6.0], (1.5, 6.5), 1e-4),
                "quintic-trap": ([1.835, 2.895, 3.923, 4.938], (1.5, 5.2), 5e-3)}
    start = time.perf_counter()
    worst = {}
    for family, (values, window, _) in expected.items():
        found = find_zero_durations(family, F0, window, len(values))
        if len(found.values) != len(values):
            worst[family] = math.inf
            continue
        worst[family] = max(abs(a - b) for a, b in zip(found.values, values))
    elapsed = time.perf_counter() - start
    ok = all(worst[f] <= expected[f][2] for f in expected) and elapsed < 10.0
    detail = ", ".join(f"{f} max err {worst[f]:.2e} (tol {expected[f][2]:g})" for f in expected)
    report(1, "zero-sloshing durations", ok, f"{detail}; {elapsed:.2f} s (limit 10 s)")


def test_criterion_2_sine_spot_value():
    req = TransportRequest.from_tf_f0(D, 1.0, F0)
    plan = build_trap_plan("sine", req)
    target = D / 3
    closed = sloshing_residual(plan, OMEGA0, "closed").amplitude
    quad = sloshing_residual(plan, OMEGA0, "quad").amplitude
    traj = integrate(plan, CFG, "harmonic", icfg=IntegratorConfig(steps_per_period=2000))
    ode = final_amplitude(traj, plan, OMEGA0)
    errs = [abs(v / target - 1) for v in (closed, quad, ode)]
    report(2, "sine at tf*f0=1 gives d/3", max(errs) < 1e-6,
           f"relative errors closed {errs[0]:.1e}, quadrature {errs[1]:.1e}, ODE {errs[2]:.1e} (tol 1e-6)")


def _grid_oracle(base, omega0, omega_c, n=200, nodes=40001):
    """Grid search of ``|R|`` over (A0, phi0) with a separately coded envelope."""
    tf = base.duration
    ramp = math.pi / omega_c
    t = np.linspace(0.0, tf, nodes)
    env = np.where(t < ramp, np.sin(0.5 * omega_c * t) ** 2,
                   np.where(t > tf - ramp, np.sin(0.5 * omega_c * (tf - t)) ** 2, 1.0))
    denv = np.where(t < ramp, 0.5 * omega_c * np.sin(omega_c * t),
                    np.where(t > tf - ramp, -0.5 * omega_c * np.sin(omega_c * (tf - t)), 0.0))
    kernel = np.exp(-1j * omega0 * t)
    r_base = simpson(kernel * base(t, 1), x=t)
    phis = np.arange(n) * 2 * math.pi / n
    amps = np.linspace(0.0, 200e-6, n)
    arg = omega_c * t[None, :] + phis[:, None]
    unit_v = denv * np.sin(arg) + env * omega_c * np.cos(arg)
    unit_r = simpson(kernel * unit_v, x=t, axis=1)
    total = np.abs(r_base + amps[None, :] * unit_r[:, None])
    i, j = np.unravel_index(np.argmin(total), total.shape)
    return amps[j], phis[i], amps[1] - amps[0], phis[1] - phis[0]


def _circular(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def test_criterion_3_correction_solver():
    start = time.perf_counter()
    lines, ok = [], True
    for family in ("quintic-trap", "sine"):
        base = build_trap_plan(family, REQ)
        sol = solve_correction(base, OMEGA0, omega_c=OMEGA_C)
        phi_deg = math.degrees(sol.params.phi0)
        residual = sloshing_residual(apply_correction(base, sol.params), OMEGA0).amplitude
        a_grid, phi_grid, da, dphi = _grid_oracle(base, OMEGA0, OMEGA_C)
        in_cell = abs(a_grid - sol.params.A0) <= da and _circular(phi_grid, sol.params.phi0) <= dphi
        at_omega0 = math.degrees(solve_correction(base, OMEGA0).params.phi0)
        ok &= abs(phi_deg - 302.0) <= 1.0 and residual < 1e-9 * D and in_cell
        lines.append(f"{family} phi0 {phi_deg:.3f} deg, A0 {sol.params.A0 * 1e6:.2f} um, residual "
                     f"{residual / D:.1e} d, grid ({a_grid * 1e6:.1f} um, {math.degrees(phi_grid):.1f} deg)"
                     f"{' within' if in_cell else ' outside'} one cell [phi0 {at_omega0:.3f} deg if omega_c=omega0]")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    report(3, "correction solver at omega_c=2pi*7.11 Hz", ok,
           "; ".join(lines) + f"; target 302+-1 deg, residual < 1e-9 d; {elapsed:.2f} s (limit 30 s)")


def test_criterion_4_septic_frequency_sensitivity():
    req = TransportRequest(D, 0.273, 2 * math.pi * 7.55)
    ratios = np.linspace(0.8, 1.2, 41)
    table = frequency_sensitivity_sweep(septic_plan(req), req.omega0, ratios * req.omega0)
    amp = table["amplitude_m"]
    mid = int(np.argmin(np.abs(ratios - 1.0)))
    rising = np.all(np.diff(amp[mid:]) > 0)
    falling = np.all(np.diff(amp[:mid + 1]) < 0)
    ok = amp[mid] < 1e-9 * D and rising and falling
    report(4, "septic frequency sensitivity", ok,
           f"amplitude at omega1=omega0 {amp[mid] / D:.1e} d (tol 1e-9), strictly increasing "
           f"below {bool(falling)}, above {bool(rising)}; ends {amp[0] * 1e6:.2f} / {amp[-1] * 1e6:.2f} um")


def test_criterion_5_fourier_dynamics_equivalence():
    rng = np.random.default_rng(5)
    families = ["sine", "triangular", "quintic-trap", "septic-trap", "quintic", "septic"]
    worst = 0.0
    for _ in range(50):
        family = families[rng.integers(len(families))]
        x = rng.uniform(0.6, 5.0)
        req = TransportRequest.from_tf_f0(D, x, F0)
        plan = build_trap_plan(family, req)
        traj = integrate(plan, CFG, "harmonic", icfg=IntegratorConfig(steps_per_period=2000))
        diff = abs(sloshing_residual(plan, OMEGA0).amplitude - final_amplitude(traj, plan, OMEGA0))
        worst = max(worst, diff / D)
    # convergence order against the exact driven solution
    plan = build_trap_plan("quintic-trap", REQ)
    exact_z, exact_v = sloshing_residual(plan, OMEGA0).final_state(OMEGA0, TF, D)
    errors = []
    for spp in (25, 50, 100):
        end = integrate(plan, CFG, "harmonic", icfg=IntegratorConfig(spp)).final
        errors.append(math.hypot(end.z - exact_z, (end.v - exact_v) / OMEGA0))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    # energy drift over ten periods in a static Gaussian trap
    traj = integrate(static_plan(TransportRequest(D, 10 / F0, OMEGA0)), CFG, "full-gaussian",
                     ParticleState(0.3 * CFG.rayleigh, 0.0))
    energy = 0.5 * CFG.mass * traj.v**2 + axial_potential(traj.z, 0.0, CFG, "full-gaussian")
    drift = float(np.max(np.abs(energy - energy[0])) / (energy[0] + CFG.depth))
    ok = worst < 1e-6 and all(3.8 < p < 4.2 for p in orders) and drift < 1e-8
    report(5, "Fourier/ODE equivalence", ok,
           f"50 cases max |A_fourier - A_ode| {worst:.1e} d (tol 1e-6); orders "
           f"{', '.join(f'{p:.2f}' for p in orders)} (expect 4); energy drift {drift:.1e} (tol 1e-8)")


def test_criterion_6_anharmonic_softening():
    cfg = TrapConfig.from_axial_frequency(OMEGA0, waist=19.45e-6, wavelength=1064e-9).with_aspect_ratio(90)
    plan = build_trap_plan("quintic-trap", REQ)
    window = 0.5
    omegas, moments = {}, {}
    for label, rms in (("cold", 229e-6), ("hot", 272e-6)):
        temperature = temperature_for_spread(cfg, rms, "full-gaussian")
        ens = sample_thermal_ensemble(cfg, temperature, 4000, seed=6, model="full-gaussian")
        obs = simulate_transport(ens, plan, cfg, "full-gaussian", t_end=TF + window, record_every=10)
        t, com = obs.after(TF)
        omegas[label] = fit_decaying_sine(t, com - D).omega
        moments[label] = ens.axial_variance()
    simulated = omegas["cold"] / omegas["hot"]

    def predicted(variant, dof):
        cold = EnsembleMoments.from_axial(cfg, moments["cold"], dof)
        hot = EnsembleMoments.from_axial(cfg, moments["hot"], dof)
        return frequency_ratio(cfg, cold, hot, variant)

    target = predicted("linear", 2)
    ok = abs(simulated / target - 1) < 0.01
    report(6, "anharmonic softening ratio", ok,
           f"simulated omega_cold/omega_hot {simulated:.4f} (post-stop fits {omegas['cold'] / 2 / math.pi:.3f}"
           f" / {omegas['hot'] / 2 / math.pi:.3f} Hz) vs linear prediction {target:.4f} (tol 1%); "
           f"sqrt variant {predicted('sqrt', 2):.4f}, linear one radial dof {predicted('linear', 1):.4f}, "
           f"sqrt one radial dof {predicted('sqrt', 1):.4f}, axial only {predicted('linear', 0):.4f}; "
           f"reference value 1.027 is reported, not asserted")


def test_criterion_7_end_to_end_pipeline():
    t_e, noise = 0.012, 2e-6
    waits = default_wait_grid(OMEGA0)
    base = build_trap_plan("quintic-trap", REQ)
    expected = sloshing_residual(base, OMEGA0).amplitude
    data = stop_and_probe_scan(base, CFG, "harmonic", waits, t_e, 3, noise, seed=71)
    recovered = extract_sloshing(data)[0].amplitude
    rel = abs(recovered / expected - 1)

    sol = solve_correction(base, OMEGA0)
    data = stop_and_probe_scan(apply_correction(base, sol.params), CFG, "harmonic", waits, t_e, 3, noise,
                               seed=72)
    _, null_fit = extract_sloshing(data, omega=OMEGA0, tau=math.inf)
    null_ok = null_fit.amplitude < 2 * null_fit.amplitude_sigma

    phases = []
    for k, scale in enumerate((0.7, 1.3)):
        params = CorrectionParams(scale * sol.params.A0, sol.params.phi0, OMEGA0)
        data = stop_and_probe_scan(apply_correction(base, params), CFG, "harmonic", waits, t_e, 3, noise,
                                   seed=73 + k)
        phases.append(extract_sloshing(data)[0].phase)
    jump = abs((phases[1] - phases[0]) % (2 * math.pi))
    ok = rel < 0.02 and null_ok and abs(jump - math.pi) < 0.1
    report(7, "end-to-end stop-and-probe pipeline", ok,
           f"in-situ {recovered * 1e6:.2f} um vs predicted {expected * 1e6:.2f} um ({rel:.2%}, tol 2%); "
           f"corrected {null_fit.amplitude * 1e6:.2f} +- {null_fit.amplitude_sigma * 1e6:.2f} um (< 2 sigma: "
           f"{null_ok}); phase jump {jump:.3f} rad (pi +- 0.1)")


def test_criterion_8_tof_prefactor():
    value = tof_prefactor(2 * math.pi * 7.08, 0.012, 0.175)
    unity = tof_prefactor(2 * math.pi * 7.08, 0.0, 0.175)
    ok = abs(value - 1.074) <= 1e-3 and unity == 1.0
    report(8, "TOF prefactor", ok, f"{value:.5f} (1.074 +- 0.001); t_e=0 gives {unity!r}; "
           f"quoted x1.09 recorded as a documentation discrepancy")


def test_criterion_9_boundary_gate():
    septic = build_trap_plan("septic", REQ)
    base = build_trap_plan("quintic-trap", REQ)
    corrected = apply_correction(base, solve_correction(base, OMEGA0).params)
    quintic = build_trap_plan("quintic", REQ)
    sep_rep = check_boundaries(septic, tol=1e-10)
    cor_rep = check_boundaries(corrected, tol=1e-10)
    q_rep = check_boundaries(quintic, tol=1e-10)
    expected = 60 * D / (TF**3 * OMEGA0**2)
    rel = abs(q_rep.residuals["trap_v0"] / expected - 1)
    ok = sep_rep.all_passed and cor_rep.all_passed and not q_rep.passed["trap_v0"] and rel < 1e-8
    report(9, "boundary gate", ok,
           f"septic failures {sep_rep.failures() or 'none'}, corrected failures {cor_rep.failures() or 'none'}, "
           f"quintic STA trap_v0 {q_rep.residuals['trap_v0']:.6e} m/s vs 60d/(tf^3 w0^2) "
           f"{expected:.6e} (rel {rel:.1e}, tol 1e-8)")


if __name__ == "__main__":
    failed = 0
    for name, func in sorted((n, f) for n, f in globals().items() if n.startswith("test_criterion_")):
        try:
            func()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
