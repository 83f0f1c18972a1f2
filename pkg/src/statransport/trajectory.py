"""Transport trajectory families, frame conversion and boundary checks.

A :class:`MotionPlan` is a position function on ``[0, t_f]`` together with its
time derivatives. Closed-form families evaluate derivatives analytically;
imported waveforms are spline-differentiated. Outside ``[0, t_f]`` a plan
holds its endpoint position and all derivatives vanish.
"""
from dataclasses import dataclass, field
from enum import Enum
import csv
import io
import math
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial


class Frame(str, Enum):
    ATOM = "atom"
    TRAP = "trap"


class Family(str, Enum):
    SINE = "sine"
    TRIANGULAR = "triangular"
    QUINTIC = "quintic"
    SEPTIC = "septic"
    CORRECTED = "corrected"
    CUSTOM = "custom"


QUINTIC_COEFFS = (0.0, 0.0, 0.0, 10.0, -15.0, 6.0)
SEPTIC_COEFFS = (0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0)


@dataclass(frozen=True)
class TransportRequest:
    """Move by ``distance`` (m) in ``duration`` (s) in a trap of ``omega0`` (rad/s)."""

    distance: float
    duration: float
    omega0: float

    def __post_init__(self):
        if not (math.isfinite(self.distance) and self.distance != 0):
            raise ValueError(f"transport distance must be non-zero, got {self.distance!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"transport duration must be positive, got {self.duration!r}")
        if not (math.isfinite(self.omega0) and self.omega0 > 0):
            raise ValueError(f"trap frequency must be positive, got {self.omega0!r}")

    @property
    def f0(self):
        return self.omega0 / (2 * math.pi)

    @property
    def tf_f0(self):
        return self.duration * self.f0

    def with_duration(self, duration):
        return TransportRequest(self.distance, duration, self.omega0)

    @classmethod
    def from_tf_f0(cls, distance, tf_f0, f0):
        return cls(distance, tf_f0 / f0, 2 * math.pi * f0)

    def to_dict(self):
        return {"distance_m": self.distance, "duration_s": self.duration, "omega0_rad_s": self.omega0}


@dataclass(frozen=True, eq=False)
class MotionPlan:
    """Immutable position function ``z(t)`` of a transport.

    ``evaluator(t, order)`` receives times already clipped to ``[0, t_f]`` as a
    float array and returns the ``order``-th derivative. ``breakpoints`` lists
    interior times where some derivative up to ``max_order`` is discontinuous.
    """

    request: TransportRequest
    frame: Frame
    family: Family
    evaluator: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)
    max_order: int = 3
    breakpoints: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def duration(self):
        return self.request.duration

    @property
    def distance(self):
        return self.request.distance

    def __call__(self, t, order=0):
        if not 0 <= order <= self.max_order:
            raise ValueError(f"{self.family.value} plan provides derivatives up to order {self.max_order}")
        t = np.asarray(t, dtype=float)
        tf = self.duration
        out = np.asarray(self.evaluator(np.clip(t, 0.0, tf), order), dtype=float)
        if order > 0:
            out = np.where((t < 0.0) | (t > tf), 0.0, out)
        return float(out) if out.ndim == 0 else out

    def position(self, t):
        return self(t, 0)

    def velocity(self, t):
        return self(t, 1)

    def acceleration(self, t):
        return self(t, 2)

    def segments(self):
        """Smooth sub-intervals of ``[0, t_f]`` split at the breakpoints."""
        edges = [0.0, *sorted(b for b in self.breakpoints if 0.0 < b < self.duration), self.duration]
        return list(zip(edges[:-1], edges[1:]))

    def sample(self, rate):
        """Times at ``rate`` Hz from 0, always ending exactly at ``t_f``."""
        n = int(math.floor(self.duration * rate + 1e-9))
        t = np.arange(n + 1) / rate
        if t[-1] < self.duration * (1 - 1e-12):
            t = np.append(t, self.duration)
        else:
            t[-1] = self.duration
        return t


def _polynomial_plan(req, coeffs, frame, family, params=None):
    poly = Polynomial(np.asarray(coeffs, dtype=float))
    derivs = [poly.deriv(k) if k else poly for k in range(8)]
    d, tf = req.distance, req.duration

    def evaluate(t, order):
        return d * derivs[order](t / tf) / tf**order

    merged = {"coefficients": [float(c) for c in poly.coef]}
    merged.update(params or {})
    return MotionPlan(req, frame, family, evaluate, max_order=7, params=merged)


def sine_plan(req):
    """Trap path with the half-sine velocity ``(pi d / 2 t_f) sin(pi t / t_f)``."""
    d, tf = req.distance, req.duration
    k = math.pi / tf

    def evaluate(t, order):
        phase = k * t
        if order == 0:
            return 0.5 * d * (1.0 - np.cos(phase))
        # d^n/dt^n of -cos(kt)/2 is -(k^n/2) cos(kt + n pi/2)
        return -0.5 * d * k**order * np.cos(phase + order * math.pi / 2)

    return MotionPlan(req, Frame.TRAP, Family.SINE, evaluate, max_order=7)


def triangular_plan(req):
    """Trap path with constant acceleration ``4d/t_f**2`` then deceleration.

    The acceleration is defined one-sidedly: ``+a`` on ``[0, t_f/2)`` and
    ``-a`` on ``[t_f/2, t_f]``.
    """
    d, tf = req.distance, req.duration
    a = 4.0 * d / tf**2
    half = 0.5 * tf

    def evaluate(t, order):
        first = t < half
        rest = tf - t
        if order == 0:
            return np.where(first, 0.5 * a * t**2, d - 0.5 * a * rest**2)
        if order == 1:
            return np.where(first, a * t, a * rest)
        if order == 2:
            return np.where(first, a, -a) * np.ones_like(t)
        return np.zeros_like(t)

    return MotionPlan(req, Frame.TRAP, Family.TRIANGULAR, evaluate, max_order=3, breakpoints=(half,))


def quintic_plan(req, frame=Frame.ATOM):
    """``d [10 s^3 - 15 s^4 + 6 s^5]`` with ``s = t / t_f``.

    Satisfies zero velocity and acceleration at both ends; the jerk is
    ``60 d / t_f**3`` at the endpoints. Use ``frame=Frame.TRAP`` to drive the
    trap directly with it.
    """
    return _polynomial_plan(req, QUINTIC_COEFFS, Frame(frame), Family.QUINTIC)


def septic_plan(req, frame=Frame.ATOM):
    """``d [35 s^4 - 84 s^5 + 70 s^6 - 20 s^7]``; the jerk also vanishes at both ends."""
    return _polynomial_plan(req, SEPTIC_COEFFS, Frame(frame), Family.SEPTIC)


def static_plan(req):
    """Trap that never moves; ``distance`` is ignored by the evaluator."""

    def evaluate(t, order):
        return np.zeros_like(t)

    return MotionPlan(req, Frame.TRAP, Family.CUSTOM, evaluate, max_order=7, params={"static": True})


def trap_from_atom(plan, omega1):
    """Trap path that drives a harmonic particle along ``plan``.

    ``z_cup = z + z'' / omega1**2``. ``omega1`` is deliberately independent of
    the true trap frequency so mis-calibration can be studied.
    """
    if plan.frame is not Frame.ATOM:
        raise ValueError("trap_from_atom needs an atom-frame plan")
    if not (omega1 > 0):
        raise ValueError(f"omega1 must be positive, got {omega1!r}")
    if plan.max_order < 3:
        raise ValueError("atom plan must provide derivatives up to third order")
    params = dict(plan.params)
    params["omega1"] = float(omega1)
    if math.isinf(omega1):
        return MotionPlan(plan.request, Frame.TRAP, plan.family, plan.evaluator,
                          plan.max_order, plan.breakpoints, params)
    params["atom_plan"] = plan
    if "coefficients" in plan.params:
        poly = Polynomial(plan.params["coefficients"])
        scaled = poly + poly.deriv(2) / (omega1 * plan.duration) ** 2
        params.pop("coefficients")
        trap = _polynomial_plan(plan.request, scaled.coef, Frame.TRAP, plan.family, params)
        return trap
    inv_w2 = 1.0 / omega1**2

    def evaluate(t, order):
        return plan.evaluator(t, order) + plan.evaluator(t, order + 2) * inv_w2

    return MotionPlan(plan.request, Frame.TRAP, plan.family, evaluate,
                      plan.max_order - 2, plan.breakpoints, params)


def atom_plan_of(trap):
    """Atom-frame plan a trap plan was derived from, if known."""
    return trap.params.get("atom_plan")


def custom_plan(t, z, omega0, frame=Frame.TRAP, degree=3, velocity=None):
    """Plan interpolating sampled positions.

    Uses an interpolating spline of ``degree`` (cubic by default) with
    not-a-knot end conditions, i.e. one-sided differentiation at the
    endpoints. When ``velocity`` samples are given a cubic Hermite spline is
    used instead. The request is inferred: distance ``z[-1] - z[0]``,
    duration ``t[-1]`` (``t[0]`` must be 0).
    """
    from scipy.interpolate import CubicHermiteSpline, make_interp_spline

    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if t.ndim != 1 or t.shape != z.shape or t.size < degree + 1:
        raise ValueError("need matching 1-D time and position samples")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("sample times must start at 0 and increase strictly")
    req = TransportRequest(float(z[-1] - z[0]), float(t[-1]), omega0)
    if velocity is not None:
        spline = CubicHermiteSpline(t, z, np.asarray(velocity, dtype=float))
        max_order = 3
        knots = t[1:-1]
    else:
        spline = make_interp_spline(t, z, k=degree)
        max_order = degree
        knots = np.unique(spline.t)
        knots = knots[(knots > 0) & (knots < t[-1])]
    derivs = [spline] + [spline.derivative(k) for k in range(1, max_order + 1)]

    def evaluate(tt, order):
        return derivs[order](tt)

    # knots bound the smooth pieces used by quadrature and the integrator
    return MotionPlan(req, Frame(frame), Family.CUSTOM, evaluate, max_order=max_order,
                      breakpoints=tuple(float(k) for k in knots), params={"samples": int(t.size)})


# ---------------------------------------------------------------------------
# Boundary conditions

BOUNDARY_KEYS = ("z0", "v0", "a0", "zf", "vf", "af", "trap_v0", "trap_vf")


@dataclass(frozen=True)
class BoundaryReport:
    """Residuals of the six atom and two trap endpoint conditions.

    ``residuals`` are in natural units (m, m/s, m/s**2); ``normalized`` divides
    them by ``d``, ``d/t_f`` and ``d/t_f**2``. A condition passes when
    ``|normalized| <= tol``.
    """

    residuals: dict
    normalized: dict
    tol: float

    @property
    def passed(self):
        return {k: bool(abs(v) <= self.tol) for k, v in self.normalized.items()}

    @property
    def all_passed(self):
        return all(self.passed.values())

    @property
    def atom_passed(self):
        p = self.passed
        return all(p[k] for k in BOUNDARY_KEYS[:6])

    @property
    def trap_passed(self):
        p = self.passed
        return p["trap_v0"] and p["trap_vf"]

    def failures(self):
        return [k for k, ok in self.passed.items() if not ok]

    def to_dict(self):
        return {
            "tol": self.tol,
            "all_passed": self.all_passed,
            "conditions": {
                k: {"residual": self.residuals[k], "normalized": self.normalized[k], "passed": self.passed[k]}
                for k in BOUNDARY_KEYS
            },
        }


def _atom_endpoints_by_simulation(trap, omega0, steps_per_period):
    from .potential import TrapConfig
    from .simulator import IntegratorConfig, ParticleState, integrate

    cfg = TrapConfig.from_axial_frequency(omega0)
    traj = integrate(trap, cfg, "harmonic", ParticleState(0.0, 0.0, 0.0),
                     IntegratorConfig(steps_per_period=steps_per_period))
    z_end, v_end = traj.z[-1], traj.v[-1]
    a_end = -omega0**2 * (z_end - trap(trap.duration))
    a_start = -omega0**2 * (0.0 - trap(0.0))
    return (0.0, 0.0, a_start), (z_end, v_end, a_end)


def check_boundaries(trap, atom=None, tol=1e-10, omega0=None, steps_per_period=20000):
    """Evaluate the eight endpoint conditions of a transport.

    Parameters
    ----------
    trap : MotionPlan
        Trap-frame plan.
    atom : MotionPlan, optional
        Atom-frame plan. If omitted, the atom path known from
        :func:`trap_from_atom` is used, or else the atom endpoint states are
        obtained by a fine harmonic simulation from rest at ``omega0``
        (default ``trap.request.omega0``).
    tol : float
        Tolerance on the normalized residuals.
    """
    if trap.frame is not Frame.TRAP:
        raise ValueError("check_boundaries needs the trap-frame plan first")
    if atom is None:
        atom = atom_plan_of(trap)
    d, tf = trap.distance, trap.duration
    if atom is not None:
        start = tuple(atom(0.0, k) for k in range(3))
        end = tuple(atom(tf, k) for k in range(3))
    else:
        start, end = _atom_endpoints_by_simulation(trap, omega0 or trap.request.omega0, steps_per_period)
    residuals = {
        "z0": start[0],
        "v0": start[1],
        "a0": start[2],
        "zf": end[0] - d,
        "vf": end[1],
        "af": end[2],
        "trap_v0": trap(0.0, 1),
        "trap_vf": trap(tf, 1),
    }
    scales = {"z0": d, "v0": d / tf, "a0": d / tf**2, "zf": d, "vf": d / tf, "af": d / tf**2,
              "trap_v0": d / tf, "trap_vf": d / tf}
    normalized = {k: float(residuals[k] / abs(scales[k])) for k in BOUNDARY_KEYS}
    return BoundaryReport({k: float(v) for k, v in residuals.items()}, normalized, tol)


# ---------------------------------------------------------------------------
# Import / export

FULL_COLUMNS = ("t_s", "z_m", "v_mps", "a_mps2")
POSITION_COLUMNS = ("t_s", "z_m")


def plan_to_csv(plan, rate=1000.0, metadata=None, columns=FULL_COLUMNS):
    """Render ``plan`` sampled at ``rate`` Hz as CSV text.

    Metadata go first as ``#key=value`` comment lines.
    """
    columns = tuple(columns)
    if columns not in (FULL_COLUMNS, POSITION_COLUMNS):
        raise ValueError(f"unsupported column set {columns}")
    t = plan.sample(rate)
    data = [t, plan(t, 0)]
    if columns == FULL_COLUMNS:
        data += [plan(t, 1), plan(t, 2)]
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"#{key}={value}\n")
    buf.write(",".join(columns) + "\n")
    for row in zip(*data):
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def write_plan_csv(plan, path, rate=1000.0, metadata=None, columns=FULL_COLUMNS):
    Path(path).write_text(plan_to_csv(plan, rate, metadata, columns))


def read_plan_csv(path, omega0=None, frame=None):
    """Load a plan CSV (either column set) as a Custom plan.

    Returns ``(plan, metadata)``. ``omega0`` defaults to the
    ``omega0_rad_s`` metadata entry; ``frame`` to ``frame`` metadata or trap.
    """
    metadata = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = next(csv.reader([line]))
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None or tuple(header[:2]) != POSITION_COLUMNS:
        raise ValueError(f"{path}: expected columns starting with t_s,z_m")
    data = np.array(rows, dtype=float)
    if omega0 is None:
        if "omega0_rad_s" not in metadata:
            raise ValueError(f"{path}: omega0 not given and not in metadata")
        omega0 = float(metadata["omega0_rad_s"])
    frame = Frame(frame or metadata.get("frame", "trap"))
    velocity = data[:, 2] if "v_mps" in header else None
    return custom_plan(data[:, 0], data[:, 1], omega0, frame=frame, velocity=velocity), metadata


def plan_descriptor(plan):
    """JSON-ready description sufficient to rebuild closed-form plans."""
    desc = {"family": plan.family.value, "frame": plan.frame.value, "request": plan.request.to_dict()}
    omega1 = plan.params.get("omega1")
    if omega1 is not None:
        desc["omega1_rad_s"] = omega1 if math.isfinite(omega1) else "inf"
        desc["atom_frame_family"] = plan.family.value
    if plan.family is Family.CORRECTED:
        p = plan.params["correction"]
        desc["correction"] = p.to_dict()
        desc["base"] = plan_descriptor(plan.params["base"])
    if plan.params.get("static"):
        desc["static"] = True
    return desc


def plan_from_descriptor(desc):
    """Inverse of :func:`plan_descriptor` for closed-form families."""
    req_d = desc["request"]
    req = TransportRequest(req_d["distance_m"], req_d["duration_s"], req_d["omega0_rad_s"])
    family = Family(desc["family"])
    if family is Family.CORRECTED:
        from .correction import CorrectionParams, apply_correction

        return apply_correction(plan_from_descriptor(desc["base"]), CorrectionParams.from_dict(desc["correction"]))
    if desc.get("static"):
        return static_plan(req)
    if family is Family.SINE:
        return sine_plan(req)
    if family is Family.TRIANGULAR:
        return triangular_plan(req)
    if family in (Family.QUINTIC, Family.SEPTIC):
        build = quintic_plan if family is Family.QUINTIC else septic_plan
        if "omega1_rad_s" in desc:
            omega1 = desc["omega1_rad_s"]
            omega1 = math.inf if omega1 == "inf" else float(omega1)
            return trap_from_atom(build(req, Frame.ATOM), omega1)
        return build(req, Frame(desc["frame"]))
    raise ValueError(f"cannot rebuild a {family.value} plan from its descriptor")


# Named trap-frame builders used by sweeps and the command line.
def _quintic_trap(req, omega1=None):
    return quintic_plan(req, Frame.TRAP)


def _septic_trap(req, omega1=None):
    return septic_plan(req, Frame.TRAP)


def _quintic_sta(req, omega1=None):
    return trap_from_atom(quintic_plan(req), omega1 or req.omega0)


def _septic_sta(req, omega1=None):
    return trap_from_atom(septic_plan(req), omega1 or req.omega0)


TRAP_BUILDERS = {
    "sine": lambda req, omega1=None: sine_plan(req),
    "triangular": lambda req, omega1=None: triangular_plan(req),
    "quintic-trap": _quintic_trap,
    "septic-trap": _septic_trap,
    "quintic": _quintic_sta,
    "septic": _septic_sta,
}


def build_trap_plan(name, req, omega1=None):
    """Trap-frame plan for a named family.

    ``quintic``/``septic`` are atom-frame paths converted by
    :func:`trap_from_atom` (at ``omega1``, default the request frequency);
    ``quintic-trap``/``septic-trap`` use the polynomial for the trap itself.
    """
    try:
        builder = TRAP_BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(TRAP_BUILDERS)}") from None
    return builder(req, omega1)
