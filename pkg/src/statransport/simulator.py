"""Classical axial dynamics of particles in a moving trap.

Fixed-step fourth-order Runge-Kutta on ``z'' = F(z - z_cup(t)) / m``. The
time grid is split at plan breakpoints, at ``t_f`` and at requested
checkpoints, and each piece gets its own uniform step, so kinks of the trap
path always fall on nodes. The trap holds its final position after ``t_f``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from . import kernels
from .potential import K_B, ForceModel, axial_potential
from .sloshing import excitation_energy
from .tables import Table


@dataclass(frozen=True)
class ParticleState:
    z: float
    v: float
    t: float = 0.0


@dataclass(frozen=True)
class IntegratorConfig:
    """RK4 step control: at most ``2 pi / (omega0 steps_per_period)`` per step.

    ``dt`` optionally caps the step further; it must respect the bound.
    ``escape`` is the distance from the trap centre, in Rayleigh ranges,
    beyond which a particle is declared lost.
    """

    steps_per_period: int = 1000
    dt: float | None = None
    escape: float = 20.0

    def __post_init__(self):
        if self.steps_per_period < 1:
            raise ValueError("steps_per_period must be >= 1")

    def step_for(self, omega0):
        bound = 2 * math.pi / (omega0 * self.steps_per_period)
        if self.dt is None:
            return bound
        if not 0 < self.dt <= bound * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:.3g} s exceeds the bound {bound:.3g} s")
        return self.dt


@dataclass
class Trajectory:
    """Dense single-particle output at every integrator node."""

    t: np.ndarray
    z: np.ndarray
    v: np.ndarray
    escaped_at: float | None = None

    @property
    def final(self):
        return ParticleState(float(self.z[-1]), float(self.v[-1]), float(self.t[-1]))

    def state_at(self, t):
        i = int(np.argmin(np.abs(self.t - t)))
        if not math.isclose(self.t[i], t, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(t))):
            raise ValueError(f"t={t} is not an integrator node")
        return ParticleState(float(self.z[i]), float(self.v[i]), float(self.t[i]))


def _edges(plan, t_end, checkpoints):
    tf = plan.duration
    pts = {0.0, tf, t_end}
    pts.update(b for b in plan.breakpoints if 0.0 < b < tf)
    pts.update(float(c) for c in checkpoints if 0.0 < c < t_end)
    pts = sorted(p for p in pts if p <= t_end)
    # merge points closer than a rounding error
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-12 * max(1.0, t_end):
            merged.append(p)
    return merged


def _segment_grid(a, b, h_max):
    n = max(1, math.ceil((b - a) / h_max - 1e-9))
    h = (b - a) / n
    half = a + 0.5 * h * np.arange(2 * n + 1)
    half[-1] = b
    return n, h, half


def integrate(plan, cfg, model, s0=ParticleState(0.0, 0.0, 0.0), icfg=IntegratorConfig(),
              t_end=None, checkpoints=()):
    """Integrate one particle through ``plan`` from ``s0`` (at ``t = 0``).

    Parameters
    ----------
    plan : MotionPlan
        Trap-frame plan.
    cfg : TrapConfig
    model : ForceModel or str
    s0 : ParticleState
    icfg : IntegratorConfig
    t_end : float, optional
        End time, default ``t_f``; the trap is held at its final position
        beyond ``t_f``.
    checkpoints : sequence of float
        Extra times that must be integrator nodes.

    Returns
    -------
    Trajectory
        ``escaped_at`` is set (and the output truncated) if the particle left
        the trap.
    """
    model = ForceModel.parse(model)
    t_end = plan.duration if t_end is None else float(t_end)
    h_max = icfg.step_for(cfg.omega0)
    w2 = cfg.omega0**2
    inv_zr2 = 1.0 / cfg.rayleigh**2
    escape = icfg.escape * cfg.rayleigh
    edges = _edges(plan, t_end, checkpoints)
    ts, zs, vs = [np.array([0.0])], [np.array([s0.z])], [np.array([s0.v])]
    z, v = s0.z, s0.v
    escaped_at = None
    for a, b in zip(edges[:-1], edges[1:]):
        n, h, half = _segment_grid(a, b, h_max)
        trap = np.ascontiguousarray(plan(half))
        seg_z, seg_v, done = kernels.rk4_path(z, v, trap, h, w2, inv_zr2, model.code, escape)
        seg_t = a + h * np.arange(1, done + 1)
        if done == n:
            seg_t[-1] = b
        ts.append(seg_t)
        zs.append(seg_z[1:])
        vs.append(seg_v[1:])
        z, v = float(seg_z[-1]), float(seg_v[-1])
        if done < n:
            escaped_at = float(seg_t[-1])
            break
    return Trajectory(np.concatenate(ts), np.concatenate(zs), np.concatenate(vs), escaped_at)


def final_amplitude(traj, plan, omega0):
    """``sqrt((z - z_cup)**2 + v**2 / omega0**2)`` at the end of ``traj``."""
    end = traj.final
    return math.hypot(end.z - plan(end.t), end.v / omega0)


# ---------------------------------------------------------------------------
# Thermal ensembles


@dataclass
class EnsembleState:
    """Particle positions and velocities (arrays) plus provenance."""

    z: np.ndarray
    v: np.ndarray
    temperature: float
    seed: int | None
    model: ForceModel = ForceModel.HARMONIC
    center: float = 0.0

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.z.size == 0 or self.z.shape != self.v.shape:
            raise ValueError("ensemble needs matching non-empty position and velocity arrays")

    def __len__(self):
        return self.z.size

    @property
    def particles(self):
        return [ParticleState(float(z), float(v)) for z, v in zip(self.z, self.v)]

    def axial_variance(self):
        """``<(z - z_cup)^2>`` around the trap centre."""
        return float(np.mean((self.z - self.center) ** 2))

    def copy(self):
        return EnsembleState(self.z.copy(), self.v.copy(), self.temperature, self.seed, self.model, self.center)


def _support(cfg, model):
    if model is ForceModel.FULL_GAUSSIAN:
        return cfg.rayleigh
    if model is ForceModel.QUARTIC:
        return cfg.rayleigh / math.sqrt(2.0)  # barrier top of the quartic
    return math.inf


def _barrier(cfg, model):
    if model is ForceModel.HARMONIC:
        return math.inf
    if model is ForceModel.QUARTIC:
        return 0.125 * cfg.mass * cfg.omega0**2 * cfg.rayleigh**2
    return cfg.depth


def _well_energy(x, cfg, model):
    u = axial_potential(x, 0.0, cfg, model)
    return u + cfg.depth if model is ForceModel.FULL_GAUSSIAN else u


def sample_thermal_ensemble(cfg, temperature, n, seed, model=ForceModel.HARMONIC, center=0.0):
    """Draw ``n`` particles from the Boltzmann distribution of ``model``.

    Harmonic: Gaussian positions with ``<z^2> = kT / (m omega0^2)``. Anharmonic
    models: rejection sampling of ``exp(-U/kT)`` on ``|z - center| < z_R``
    (quartic: below its barrier). Velocities are Maxwellian.

    Raises
    ------
    ValueError
        If ``kT`` is not below the trap depth (barrier), ``T <= 0`` or ``n < 1``.
    """
    model = ForceModel.parse(model)
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if n < 1:
        raise ValueError("need at least one particle")
    kt = K_B * temperature
    if kt >= _barrier(cfg, model):
        raise ValueError(f"kT = {kt:.3g} J is not below the trap depth {_barrier(cfg, model):.3g} J")
    rng = np.random.default_rng(seed)
    sigma_v = math.sqrt(kt / cfg.mass)
    if model is ForceModel.HARMONIC:
        z = rng.normal(0.0, math.sqrt(kt / (cfg.mass * cfg.omega0**2)), n)
    else:
        half = _support(cfg, model)
        chunks, have = [], 0
        while have < n:
            x = rng.uniform(-half, half, max(1024, 4 * (n - have)))
            keep = rng.random(x.size) < np.exp(-_well_energy(x, cfg, model) / kt)
            chunks.append(x[keep])
            have += int(keep.sum())
        z = np.concatenate(chunks)[:n]
    v = rng.normal(0.0, sigma_v, n)
    return EnsembleState(z + center, v, temperature, seed, model, center)


def thermal_rms(cfg, temperature, model=ForceModel.HARMONIC):
    """Exact RMS axial spread of the (truncated) Boltzmann distribution."""
    model = ForceModel.parse(model)
    kt = K_B * temperature
    if model is ForceModel.HARMONIC:
        return math.sqrt(kt / (cfg.mass * cfg.omega0**2))
    half = _support(cfg, model)

    def weight(x):
        return math.exp(-_well_energy(x, cfg, model) / kt)

    norm = sp_integrate.quad(weight, -half, half, points=[0.0], limit=200)[0]
    second = sp_integrate.quad(lambda x: x * x * weight(x), -half, half, points=[0.0], limit=200)[0]
    return math.sqrt(second / norm)


def temperature_for_spread(cfg, rms, model=ForceModel.HARMONIC):
    """Temperature whose thermal axial RMS spread equals ``rms``."""
    model = ForceModel.parse(model)
    if model is ForceModel.HARMONIC:
        return cfg.mass * cfg.omega0**2 * rms**2 / K_B
    t_hi = 0.999 * _barrier(cfg, model) / K_B
    if thermal_rms(cfg, t_hi, model) < rms:
        raise ValueError(f"spread {rms:.3g} m is not reachable below the trap depth")
    return optimize.brentq(lambda t: thermal_rms(cfg, t, model) - rms, 1e-6 * t_hi, t_hi, xtol=1e-15, rtol=1e-12)


# ---------------------------------------------------------------------------
# Ensemble transport


@dataclass
class Observables:
    """Per-node ensemble observables (over surviving particles)."""

    t: np.ndarray
    com: np.ndarray
    com_v: np.ndarray
    var: np.ndarray
    e_exc: np.ndarray
    surviving_fraction: np.ndarray
    final_state: EnsembleState = field(repr=False, default=None)

    def table(self):
        return Table.from_columns(t_s=self.t, com_m=self.com, var_m2=self.var, e_exc_J=self.e_exc,
                                  surviving_fraction=self.surviving_fraction)

    def after(self, t0):
        sel = self.t >= t0 - 1e-12
        return self.t[sel] - t0, self.com[sel]


def simulate_transport(ensemble, plan, cfg, model, icfg=IntegratorConfig(), t_end=None,
                       checkpoints=(), record_every=1):
    """Move a whole ensemble through ``plan``, recording observables.

    Records, every ``record_every`` nodes and at all segment edges: centre
    of mass, position variance, centre-of-mass excitation energy
    ``(m/2) u'^2 + (m/2) omega0^2 u^2`` with ``u = <z> - z_cup`` and the
    surviving fraction. Particles are independent; only their order-fixed
    numpy reductions couple them.
    """
    model = ForceModel.parse(model)
    t_end = plan.duration if t_end is None else float(t_end)
    h_max = icfg.step_for(cfg.omega0)
    w2 = cfg.omega0**2
    inv_zr2 = 1.0 / cfg.rayleigh**2
    escape = icfg.escape * cfg.rayleigh
    state = ensemble.copy()
    z, v = state.z, state.v
    alive = np.ones(z.size, dtype=np.uint8)
    n_total = z.size
    rec = {k: [] for k in ("t", "com", "com_v", "var", "e", "surv")}

    def record(t):
        mask = alive.astype(bool)
        zz, vv = z[mask], v[mask]
        if zz.size == 0:
            com = comv = var = e = math.nan
        else:
            com, comv = float(np.mean(zz)), float(np.mean(vv))
            var = float(np.mean((zz - com) ** 2))
            e = float(excitation_energy(com - plan(t), comv - plan(t, 1), cfg.omega0, cfg.mass))
        for key, val in zip(rec, (t, com, comv, var, e, zz.size / n_total)):
            rec[key].append(val)

    record(0.0)
    edges = _edges(plan, t_end, checkpoints)
    for a, b in zip(edges[:-1], edges[1:]):
        n, h, half = _segment_grid(a, b, h_max)
        trap = np.ascontiguousarray(plan(half))
        k = 0
        while k < n:
            m = min(record_every, n - k)
            kernels.rk4_ensemble(z, v, alive, trap[2 * k:2 * (k + m) + 1], h, w2, inv_zr2, model.code, escape)
            k += m
            record(b if k == n else a + k * h)
    state.z, state.v = z, v
    arrays = {k: np.asarray(val) for k, val in rec.items()}
    return Observables(arrays["t"], arrays["com"], arrays["com_v"], arrays["var"], arrays["e"],
                       arrays["surv"], state)


def time_of_flight(z, v, t_e):
    """Ballistic expansion: ``z + v t_e``."""
    if t_e < 0:
        raise ValueError("expansion time must be non-negative")
    return np.asarray(z) + np.asarray(v) * t_e


# ---------------------------------------------------------------------------
# Stop-and-probe protocol


@dataclass
class ProbeDataset:
    """Synthetic centre-of-mass measurements after ballistic expansion.

    ``z_tof`` are absolute positions; ``origin`` is the final trap position
    and ``t_stop`` the transport duration (waiting time zero).
    """

    t_wait: np.ndarray
    rep: np.ndarray
    z_tof: np.ndarray
    t_e: float
    origin: float
    t_stop: float
    noise_sigma: float = 0.0

    def table(self):
        return Table.from_columns(t_wait_s=self.t_wait, rep=self.rep, z_tof_m=self.z_tof)

    def metadata(self):
        return {"t_e_s": repr(self.t_e), "origin_m": repr(self.origin), "t_stop_s": repr(self.t_stop),
                "noise_sigma_m": repr(self.noise_sigma)}

    def write_csv(self, path):
        self.table().write_csv(path, self.metadata())

    @classmethod
    def read_csv(cls, path):
        meta = {}
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key] = float(value)
        table = Table.read_csv(path)
        return cls(table["t_wait_s"], table["rep"].astype(int), table["z_tof_m"], meta["t_e_s"],
                   meta["origin_m"], meta["t_stop_s"], meta.get("noise_sigma_m", 0.0))

    def averaged(self):
        """Repetition means and standard errors per waiting time."""
        waits = np.unique(self.t_wait)
        y = self.z_tof - self.origin
        means = np.array([y[self.t_wait == w].mean() for w in waits])
        counts = np.array([np.count_nonzero(self.t_wait == w) for w in waits])
        sems = np.array([y[self.t_wait == w].std(ddof=1) if c > 1 else 0.0 for w, c in zip(waits, counts)])
        return waits, means, sems / np.sqrt(counts)


def default_wait_grid(omega0, count=11, periods=2.0):
    return np.linspace(0.0, periods * 2 * math.pi / omega0, count)


def stop_and_probe_scan(plan, cfg, model, waits, t_e, repetitions=3, noise_sigma=0.0, seed=0,
                        ensemble=None, icfg=IntegratorConfig()):
    """Transport, wait, release and image the centre of mass.

    For each waiting time after ``t_f`` the centre of mass is expanded
    ballistically for ``t_e`` and recorded ``repetitions`` times with
    additive Gaussian noise of ``noise_sigma``. Without ``ensemble`` a single
    particle starting at rest at the trap centre stands in for the cloud.
    """
    waits = np.asarray(waits, dtype=float)
    if np.any(waits < 0):
        raise ValueError("waiting times must be non-negative")
    tf = plan.duration
    stops = tf + waits
    if ensemble is None:
        traj = integrate(plan, cfg, model, icfg=icfg, t_end=stops.max(), checkpoints=stops)
        if traj.escaped_at is not None:
            raise RuntimeError(f"particle escaped at t={traj.escaped_at:.6g} s")
        states = [traj.state_at(s) for s in stops]
        com = np.array([s.z for s in states])
        com_v = np.array([s.v for s in states])
    else:
        obs = simulate_transport(ensemble, plan, cfg, model, icfg, t_end=stops.max(), checkpoints=stops)
        idx = [int(np.argmin(np.abs(obs.t - s))) for s in stops]
        com, com_v = obs.com[idx], obs.com_v[idx]
    imaged = time_of_flight(com, com_v, t_e)
    rng = np.random.default_rng(seed)
    t_wait = np.repeat(waits, repetitions)
    rep = np.tile(np.arange(repetitions), waits.size)
    z_tof = np.repeat(imaged, repetitions)
    if noise_sigma > 0:
        z_tof = z_tof + rng.normal(0.0, noise_sigma, z_tof.size)
    return ProbeDataset(t_wait, rep, z_tof, float(t_e), float(plan(tf)), float(tf), float(noise_sigma))
