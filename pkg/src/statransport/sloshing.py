"""Residual centre-of-mass sloshing after a transport.

For a harmonic trap the final sloshing amplitude is the modulus of

    R = integral_0^t_f exp(-i omega0 t) dz_cup/dt dt,

the Fourier component of the trap velocity at the trap frequency. The phase of
``R`` is reported for that ``exp(-i omega0 t)`` kernel.
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate, optimize

from .tables import Table
from .trajectory import Family, Frame, TransportRequest, build_trap_plan


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class SloshingResult:
    """Complex residual ``R`` (m) with amplitude ``|R|`` and phase in ``[0, 2 pi)``."""

    residual: complex

    @property
    def amplitude(self):
        return abs(self.residual)

    @property
    def phase(self):
        return math.atan2(self.residual.imag, self.residual.real) % (2 * math.pi)

    def final_state(self, omega0, duration, distance):
        """Harmonic particle state ``(z, v)`` at ``t_f`` implied by the residual."""
        w = -1j * omega0 * np.exp(1j * omega0 * duration) * self.residual
        return distance + w.imag / omega0, w.real


def _quad_complex(func, a, b, omega, epsabs, limit):
    parts = []
    for weight in (np.cos, np.sin):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, err, info = integrate.quad(
                lambda t: func(t) * weight(omega * t), a, b,
                epsabs=epsabs, epsrel=0.0, limit=limit, full_output=1)[:3]
        # ier 2 (roundoff) still yields an error estimate we can judge
        if err > 10 * epsabs and err > 1e-14 * abs(value):
            raise QuadratureError(f"quadrature on [{a:.6g}, {b:.6g}] reached error {err:.3g} > {epsabs:.3g}")
        parts.append(value)
    return parts[0] - 1j * parts[1]


def velocity_residual(velocity, segments, omega, scale, epsabs_rel=1e-12, limit=200):
    """``integral exp(-i omega t) velocity(t) dt`` summed over smooth segments.

    ``scale`` sets the absolute tolerance ``epsabs_rel * scale`` (a length).
    """
    if not segments:
        return 0j
    epsabs = epsabs_rel * abs(scale) / len(segments)
    return sum(_quad_complex(velocity, a, b, omega, epsabs, limit) for a, b in segments)


def _sine_residual(plan, omega):
    d, tf = plan.distance, plan.duration
    k = math.pi / tf
    if abs(k - omega) < 1e-6 * k:
        return None  # resonant point; quadrature handles it
    integral = k * (1.0 + np.exp(-1j * omega * tf)) / (k**2 - omega**2)
    return complex(0.5 * math.pi * d / tf * integral)


def _triangular_residual(plan, omega):
    d, tf = plan.distance, plan.duration
    half = 0.5 * tf
    value = 8.0 * d / (tf * omega) ** 2 * (1.0 - math.cos(omega * half))
    return complex(np.exp(-1j * omega * half) * value)


_CLOSED_FORMS = {Family.SINE: _sine_residual, Family.TRIANGULAR: _triangular_residual}


def sloshing_residual(plan, omega0, method="auto", epsabs_rel=1e-12):
    """Sloshing residual of a trap-frame plan at trap frequency ``omega0``.

    Parameters
    ----------
    plan : MotionPlan
        Trap-frame plan with a first derivative.
    omega0 : float
        Trap angular frequency (rad/s).
    method : {"auto", "quad", "closed"}
        ``auto`` uses a registered closed form (sine, triangular) and falls
        back to adaptive Gauss-Kronrod quadrature per smooth segment.
    epsabs_rel : float
        Absolute quadrature tolerance in units of ``|d|``.

    Raises
    ------
    QuadratureError
        If the quadrature tolerance is not met.
    ValueError
        For atom-frame plans, non-positive ``omega0`` or an unavailable closed
        form.
    """
    if plan.frame is not Frame.TRAP:
        raise ValueError("sloshing is defined for trap-frame plans")
    if not omega0 > 0:
        raise ValueError(f"omega0 must be positive, got {omega0!r}")
    if plan.params.get("static"):
        return SloshingResult(0j)
    if method in ("auto", "closed"):
        closed = _CLOSED_FORMS.get(plan.family)
        value = closed(plan, omega0) if closed is not None else None
        if value is not None:
            return SloshingResult(value)
        if method == "closed":
            raise ValueError(f"no closed form for {plan.family.value} at this frequency")
    elif method != "quad":
        raise ValueError(f"unknown method {method!r}")
    return SloshingResult(velocity_residual(plan.velocity, plan.segments(), omega0, plan.distance, epsabs_rel))


def excitation_energy(u, udot, omega0, m):
    """Comoving-frame energy ``(m/2) udot**2 + (m/2) omega0**2 u**2`` with ``u = z - z_cup``."""
    return 0.5 * m * np.square(udot) + 0.5 * m * omega0**2 * np.square(u)


def _family_builder(family):
    if callable(family):
        return family
    return lambda req: build_trap_plan(family, req)


def amplitude_vs_duration_sweep(family, f0, grid, distance=1.0):
    """``|R|/d`` and phase over a grid of ``t_f f0`` values.

    ``family`` is a name accepted by :func:`build_trap_plan` or a callable
    ``request -> trap plan``. Columns: ``tf_f0, amplitude_over_d, phase_rad``.
    """
    build = _family_builder(family)
    omega0 = 2 * math.pi * f0
    rows = []
    for x in np.asarray(grid, dtype=float):
        plan = build(TransportRequest(distance, x / f0, omega0))
        res = sloshing_residual(plan, omega0)
        rows.append((x, res.amplitude / abs(distance), res.phase))
    return Table(("tf_f0", "amplitude_over_d", "phase_rad"), rows)


@dataclass(frozen=True)
class ZeroSearch:
    """Located zero-sloshing durations (in units of ``t_f f0``)."""

    values: list
    residuals: list
    requested: int

    @property
    def complete(self):
        return len(self.values) >= self.requested


def find_zero_durations(family, f0, search_range, count, distance=1.0, step=0.01,
                        xtol=1e-10, zero_tol=1e-7):
    """Durations ``t_f f0`` in ``search_range`` with vanishing sloshing.

    ``|R|`` touches zero without changing sign, so candidate minima of
    ``|R|^2`` are bracketed on a ``step`` grid and refined by golden-section
    search. A minimum counts as a root when ``|R|/|d| < zero_tol``.
    The result may be partial; check :attr:`ZeroSearch.complete`.
    """
    lo, hi = search_range
    if not 0 < lo < hi:
        raise ValueError(f"search range must be positive and increasing, got {search_range!r}")
    build = _family_builder(family)
    omega0 = 2 * math.pi * f0

    def sq_amp(x):
        plan = build(TransportRequest(distance, x / f0, omega0))
        return (sloshing_residual(plan, omega0).amplitude / abs(distance)) ** 2

    grid = np.arange(lo, hi + 0.5 * step, step)
    values = np.array([sq_amp(x) for x in grid])
    roots, residuals = [], []
    for i in range(1, len(grid) - 1):
        if not (values[i] <= values[i - 1] and values[i] < values[i + 1]):
            continue
        sol = optimize.minimize_scalar(sq_amp, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                       method="golden", options={"xtol": xtol})
        amp = math.sqrt(max(sol.fun, 0.0))
        if amp < zero_tol:
            roots.append(float(sol.x))
            residuals.append(amp)
            if len(roots) == count:
                break
    return ZeroSearch(roots, residuals, count)
