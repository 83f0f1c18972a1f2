"""Spectral correction of trap trajectories.

A ramped sinusoid ``A(t) sin(omega_c t + phi0)`` is added to a base trap path.
``A`` rises as ``A0 sin^2(omega_c t / 2)`` over ``pi / omega_c``, stays at
``A0`` and falls with the time-reversed ramp, so ``A`` and ``dA/dt`` vanish at
both ends and the trap still starts and stops at rest.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize

from .sloshing import SloshingResult, sloshing_residual, velocity_residual
from .tables import Table
from .trajectory import Family, Frame, MotionPlan, trap_from_atom


class CorrectionError(RuntimeError):
    """The correction could not be constructed or did not null the residual."""


@dataclass(frozen=True)
class CorrectionParams:
    """Amplitude ``A0`` (m), phase ``phi0`` (rad) and frequency ``omega_c`` (rad/s)."""

    A0: float
    phi0: float
    omega_c: float

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError(f"correction frequency must be positive, got {self.omega_c!r}")

    @property
    def ramp_T(self):
        return math.pi / self.omega_c

    def to_dict(self):
        return {"A0_m": self.A0, "phi0_rad": self.phi0, "omega_c_rad_s": self.omega_c}

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["A0_m"]), float(data["phi0_rad"]), float(data["omega_c_rad_s"]))


def _envelope(t, order, A0, w, tf):
    """``order``-th derivative of the ramp-plateau-ramp envelope."""
    ramp = math.pi / w
    rising = t < ramp
    falling = t > tf - ramp
    s = np.where(rising, t, np.where(falling, tf - t, 0.0))
    sign = (-1.0) ** order if order else 1.0
    if order == 0:
        ramp_val = 0.5 * A0 * (1.0 - np.cos(w * s))
        plateau = A0
    else:
        # d^n/ds^n of -cos(ws)/2 = -(w^n / 2) cos(ws + n pi / 2)
        ramp_val = -0.5 * A0 * w**order * np.cos(w * s + order * math.pi / 2)
        plateau = 0.0
    return np.where(rising, ramp_val, np.where(falling, sign * ramp_val, plateau))


def correction_term(t, order, p, tf):
    """``order``-th time derivative of ``A(t) sin(omega_c t + phi0)``."""
    w = p.omega_c
    total = np.zeros_like(np.asarray(t, dtype=float))
    for j in range(order + 1):
        carrier = w ** (order - j) * np.sin(w * t + p.phi0 + (order - j) * math.pi / 2)
        total = total + math.comb(order, j) * _envelope(t, j, p.A0, w, tf) * carrier
    return total


def apply_correction(base, p, tol=1e-9):
    """Add the ramped spectral correction ``p`` to a trap-frame ``base`` plan.

    Raises
    ------
    CorrectionError
        When ``t_f < 2 pi / omega_c`` (the ramps would overlap) or the base
        trap does not start and end at rest (``|v|/(d/t_f) > tol``).
    """
    if base.frame is not Frame.TRAP:
        raise CorrectionError("the correction applies to trap-frame plans")
    tf = base.duration
    if 2 * p.ramp_T > tf * (1 + 1e-12):
        raise CorrectionError(f"duration {tf:.6g} s is shorter than both ramps ({2 * p.ramp_T:.6g} s)")
    vscale = abs(base.distance) / tf
    for t_end in (0.0, tf):
        v = base(t_end, 1)
        if abs(v) > tol * vscale:
            raise CorrectionError(f"base trap moves at t={t_end:.6g} s (v={v:.3g} m/s); "
                                  "the correction assumes a trap at rest at both ends")
    if p.A0 == 0.0:
        evaluate = base.evaluator
    else:
        def evaluate(t, order):
            return base.evaluator(t, order) + correction_term(t, order, p, tf)
    breaks = sorted(set(base.breakpoints) | {p.ramp_T, tf - p.ramp_T})
    breaks = tuple(b for b in breaks if 0.0 < b < tf)
    return MotionPlan(base.request, Frame.TRAP, Family.CORRECTED, evaluate,
                      min(base.max_order, 7), breaks, {"base": base, "correction": p})


def _correction_response(base, omega0, omega_c, phi0):
    """Residual contributed by a unit-amplitude correction at phase ``phi0``."""
    p = CorrectionParams(1.0, phi0, omega_c)
    tf = base.duration
    edges = sorted({0.0, p.ramp_T, tf - p.ramp_T, tf})
    segments = list(zip(edges[:-1], edges[1:]))
    return velocity_residual(lambda t: correction_term(t, 1, p, tf), segments, omega0, 1.0)


@dataclass(frozen=True)
class CorrectionSolution:
    params: CorrectionParams
    residual: SloshingResult
    method: str
    condition: float

    def to_dict(self):
        out = self.params.to_dict()
        out["residual_m"] = self.residual.amplitude
        out["phi0_deg"] = math.degrees(self.params.phi0)
        out["method"] = self.method
        return out


def solve_correction(base, omega0, omega_c=None, tol=1e-9, max_condition=1e8):
    """Correction amplitude and phase that null the residual of ``base``.

    The corrected residual is linear in ``(A0 cos phi0, A0 sin phi0)``:
    ``R = R_base + x C_c + y C_s`` with ``C_c``, ``C_s`` the responses of unit
    corrections at ``phi0 = 0`` and ``pi/2``. That 2x2 real system is solved
    directly; if it is ill-conditioned (``cond > max_condition``) ``|R|^2`` is
    minimised by Nelder-Mead instead.

    Parameters
    ----------
    base : MotionPlan
        Trap-frame plan at rest at both ends.
    omega0 : float
        Frequency at which sloshing is evaluated.
    omega_c : float, optional
        Correction (and ramp) frequency, default ``omega0``.
    tol : float
        Required ``|R| / |d|`` of the corrected plan.
    """
    omega_c = omega0 if omega_c is None else omega_c
    d = abs(base.distance)
    apply_correction(base, CorrectionParams(0.0, 0.0, omega_c))  # validates preconditions
    r_base = sloshing_residual(base, omega0).residual
    if abs(r_base) <= tol * d:
        params = CorrectionParams(0.0, 0.0, omega_c)
        return CorrectionSolution(params, SloshingResult(r_base), "already-null", 1.0)
    c_c = _correction_response(base, omega0, omega_c, 0.0)
    c_s = _correction_response(base, omega0, omega_c, 0.5 * math.pi)
    matrix = np.array([[c_c.real, c_s.real], [c_c.imag, c_s.imag]])
    cond = float(np.linalg.cond(matrix))
    if cond <= max_condition:
        x, y = np.linalg.solve(matrix, [-r_base.real, -r_base.imag])
        method = "linear"
    else:
        def objective(v):
            r = r_base + v[0] * c_c + v[1] * c_s
            return (abs(r) / d) ** 2

        sol = optimize.minimize(objective, x0=[0.0, 0.0], method="Nelder-Mead",
                                options={"xatol": 1e-14 * d, "fatol": 1e-30, "maxiter": 20000})
        x, y = sol.x
        method = "nelder-mead"
    params = CorrectionParams(float(math.hypot(x, y)), float(math.atan2(y, x) % (2 * math.pi)), omega_c)
    residual = sloshing_residual(apply_correction(base, params), omega0)
    if residual.amplitude > tol * d:
        raise CorrectionError(f"corrected residual {residual.amplitude:.3g} m exceeds {tol:g} d "
                              f"(method {method}, condition {cond:.3g})")
    return CorrectionSolution(params, residual, method, cond)


def amplitude_sweep(base, phi0, omega0, a0_grid, omega_c=None):
    """Sloshing amplitude and phase of the corrected plan versus ``A0``.

    Columns: ``A0_m, amplitude_m, phase_rad``.
    """
    omega_c = omega0 if omega_c is None else omega_c
    rows = []
    for a0 in np.asarray(a0_grid, dtype=float):
        res = sloshing_residual(apply_correction(base, CorrectionParams(float(a0), phi0, omega_c)), omega0)
        rows.append((a0, res.amplitude, res.phase))
    return Table(("A0_m", "amplitude_m", "phase_rad"), rows)


def frequency_sensitivity_sweep(atom_plan, omega0, omega1_grid):
    """Sloshing of ``trap_from_atom(atom_plan, omega1)`` evaluated at the true ``omega0``.

    ``omega1 = inf`` uses the atom path directly as the trap path.
    Columns: ``omega1_rad_s, omega1_over_omega0, amplitude_m, phase_rad``.
    """
    rows = []
    for omega1 in np.asarray(omega1_grid, dtype=float):
        res = sloshing_residual(trap_from_atom(atom_plan, float(omega1)), omega0)
        rows.append((omega1, omega1 / omega0, res.amplitude, res.phase))
    return Table(("omega1_rad_s", "omega1_over_omega0", "amplitude_m", "phase_rad"), rows)
