"""Recover sloshing parameters from stop-and-probe data.

Model for the centre of mass imaged after a ballistic expansion ``t_e``::

    A sqrt((1 - t_e/tau)^2 + (w t_e)^2) sin(w t + phi + arctan(w t_e / (1 - t_e/tau))) exp(-t/tau)

which is ``A exp(-t/tau) [(1 - t_e/tau) sin(w t + phi) + w t_e cos(w t + phi)]``,
the in-situ oscillation ``A sin(w t + phi) exp(-t/tau)`` propagated by
``z + v t_e``. ``A`` is therefore the in-situ amplitude.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .sloshing import SloshingResult


class FitError(RuntimeError):
    """The decaying-sine fit failed or the data cannot constrain it."""


def tof_prefactor(omega, t_e, tau=math.inf):
    """Magnification ``sqrt((1 - t_e/tau)^2 + (omega t_e)^2)`` of a ballistic expansion."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return math.hypot(1.0 - t_e / tau, omega * t_e)


def tof_phase_shift(omega, t_e, tau=math.inf):
    """Phase advance ``arctan(omega t_e / (1 - t_e/tau))`` of the imaged signal."""
    return math.atan2(omega * t_e, 1.0 - t_e / tau)


def decaying_sine(t, amplitude, gamma, omega, phi, t_e=0.0):
    """Evaluate the expansion-imaged model with decay rate ``gamma = 1/tau``."""
    t = np.asarray(t, dtype=float)
    arg = omega * t + phi
    return amplitude * np.exp(-gamma * t) * ((1.0 - t_e * gamma) * np.sin(arg) + omega * t_e * np.cos(arg))


@dataclass
class DecayingSineFit:
    """Fitted ``A`` (in situ, m), decay rate ``gamma`` (1/s), ``omega`` (rad/s), ``phi`` (rad, [0, 2 pi)).

    The decay is fitted as a rate so undamped data stay well conditioned;
    ``tau`` is ``1/gamma`` (infinite when ``gamma <= 0``). ``covariance`` is
    over ``(A, gamma, omega, phi)``; fixed parameters have zero variance.
    """

    amplitude: float
    gamma: float
    omega: float
    phi: float
    covariance: np.ndarray
    t_e: float
    chi2: float
    chi2_history: list = field(default_factory=list)
    iterations: int = 0
    weighted: bool = False

    @property
    def tau(self):
        return math.inf if self.gamma <= 0 else 1.0 / self.gamma

    @property
    def sigmas(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def amplitude_sigma(self):
        return float(self.sigmas[0])

    @property
    def phi_sigma(self):
        return float(self.sigmas[3])

    @property
    def omega_sigma(self):
        return float(self.sigmas[2])

    @property
    def prefactor(self):
        return math.hypot(1.0 - self.t_e * self.gamma, self.omega * self.t_e)

    @property
    def apparent_amplitude(self):
        """Amplitude of the imaged signal, ``A * prefactor``."""
        return self.amplitude * self.prefactor

    def predict(self, t):
        return decaying_sine(t, self.amplitude, self.gamma, self.omega, self.phi, self.t_e)

    def to_dict(self):
        return {
            "amplitude_m": self.amplitude,
            "amplitude_sigma_m": self.amplitude_sigma,
            "tau_s": self.tau if math.isfinite(self.tau) else "inf",
            "gamma_per_s": self.gamma,
            "omega_rad_s": self.omega,
            "phi_rad": self.phi,
            "prefactor": self.prefactor,
            "apparent_amplitude_m": self.apparent_amplitude,
            "in_situ_amplitude_m": self.amplitude,
            "t_e_s": self.t_e,
            "chi2": self.chi2,
            "iterations": self.iterations,
        }


def _linear_fit(t, y, w, omega, gamma):
    env = np.exp(-gamma * t)
    basis = np.column_stack([env * np.sin(omega * t), env * np.cos(omega * t)])
    coef, *_ = np.linalg.lstsq(basis * w[:, None], y * w, rcond=None)
    resid = y - basis @ coef
    return coef, float(np.sum((resid * w) ** 2))


def _initial_guess(t, y, w, t_e):
    span = t.max() - t.min()
    dt = np.median(np.diff(np.unique(t)))
    lo = math.pi / span  # half a period across the data
    hi = math.pi / dt
    omegas = np.linspace(lo, hi, 4000)
    # periodogram: chi-square of the (sin, cos) linear fit at each trial omega
    arg = np.outer(omegas, t)
    s, c = np.sin(arg) * w, np.cos(arg) * w
    yw = y * w
    ss, cc, sc = (s * s).sum(1), (c * c).sum(1), (s * c).sum(1)
    sy, cy = s @ yw, c @ yw
    det = ss * cc - sc**2
    with np.errstate(divide="ignore", invalid="ignore"):
        explained = np.where(det > 1e-12 * ss * cc, (cc * sy**2 - 2 * sc * sy * cy + ss * cy**2) / det, -np.inf)
    omega = float(omegas[np.argmax(explained)])
    # log-envelope slope from the amplitudes of the two halves
    mid = np.median(t)
    first, second = t <= mid, t > mid
    gamma = 0.0
    if first.sum() >= 3 and second.sum() >= 3:
        a1 = math.hypot(*_linear_fit(t[first], y[first], w[first], omega, 0.0)[0])
        a2 = math.hypot(*_linear_fit(t[second], y[second], w[second], omega, 0.0)[0])
        if a1 > 0 and a2 > 0:
            gamma = max(0.0, math.log(a1 / a2) / (t[second].mean() - t[first].mean()))
    (a, b), _ = _linear_fit(t, y, w, omega, gamma)
    apparent, psi = math.hypot(a, b), math.atan2(b, a)
    scale = math.hypot(1.0 - t_e * gamma, omega * t_e)
    return np.array([apparent / scale, gamma, omega, psi - math.atan2(omega * t_e, 1.0 - t_e * gamma)])


def fit_decaying_sine(t, z, sigma=None, t_e=0.0, omega=None, tau=None, max_iter=200, xtol=1e-10):
    """Weighted damped least-squares fit of the expansion-imaged decaying sine.

    Parameters
    ----------
    t, z : array_like
        Waiting times (s) and centre-of-mass displacements (m).
    sigma : array_like, optional
        Per-point 1-sigma errors. Without them the fit is unweighted and the
        covariance is scaled by the reduced chi-square.
    t_e : float
        Ballistic expansion time (held fixed).
    omega, tau : float, optional
        Hold the frequency or decay time fixed (``tau=np.inf`` for no decay).

    Raises
    ------
    ValueError
        Fewer than 8 points, or data spanning less than half a period.
    FitError
        Constant data or no convergence within ``max_iter`` iterations.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(z, dtype=float)
    if t.shape != y.shape or t.size < 8:
        raise ValueError("need at least 8 matching data points")
    if np.ptp(y) == 0.0:
        raise FitError("constant data carry no oscillation to fit")
    weighted = sigma is not None
    if weighted:
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), t.shape)
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        w = 1.0 / sigma
    else:
        w = np.ones_like(t)

    p = _initial_guess(t, y, w, t_e)
    fixed = np.zeros(4, dtype=bool)
    if omega is not None:
        p[2] = omega
        fixed[2] = True
    if tau is not None:
        p[1] = 0.0 if math.isinf(tau) else 1.0 / tau
        fixed[1] = True
    if fixed.any():
        (a, b), _ = _linear_fit(t, y, w, p[2], p[1])
        scale = math.hypot(1.0 - t_e * p[1], p[2] * t_e)
        p[0] = math.hypot(a, b) / scale
        p[3] = math.atan2(b, a) - math.atan2(p[2] * t_e, 1.0 - t_e * p[1])
    if p[2] * np.ptp(t) < math.pi:
        raise ValueError("data must span at least half an oscillation period")
    free = np.flatnonzero(~fixed)
    span = np.ptp(t)
    # per-parameter scales for steps and convergence
    typical = np.array([max(abs(p[0]), np.ptp(y)), 1.0 / span, p[2], 1.0])

    def residuals(q):
        return (decaying_sine(t, q[0], q[1], q[2], q[3], t_e) - y) * w

    def jacobian(q, r0):
        jac = np.empty((t.size, free.size))
        for col, j in enumerate(free):
            step = 1e-6 * max(abs(q[j]), typical[j])
            qj = q.copy()
            qj[j] += step
            jac[:, col] = (residuals(qj) - r0) / step
        return jac

    r = residuals(p)
    chi2 = float(r @ r)
    history = [chi2]
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = jacobian(p, r)
        jtj = jac.T @ jac
        grad = jac.T @ r
        accepted = False
        while lam < 1e16:
            lhs = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-300))
            try:
                delta = -np.linalg.solve(lhs, grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p.copy()
            trial[free] += delta
            r_trial = residuals(trial)
            chi2_trial = float(r_trial @ r_trial)
            if chi2_trial <= chi2:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no descent direction left at machine precision
            break
        rel_change = np.max(np.abs(delta) / (np.abs(p[free]) + typical[free]))
        p, r, chi2 = trial, r_trial, chi2_trial
        history.append(chi2)
        lam = max(lam / 10.0, 1e-12)
        if rel_change < xtol or chi2 == 0.0:
            converged = True
            break
    if not converged:
        raise FitError(f"decaying-sine fit did not converge in {max_iter} iterations")

    jac = jacobian(p, r)
    cov_free = np.linalg.pinv(jac.T @ jac)
    dof = t.size - free.size
    if not weighted:
        cov_free = cov_free * (chi2 / dof if dof > 0 else 0.0)
    cov = np.zeros((4, 4))
    cov[np.ix_(free, free)] = cov_free
    amplitude, gamma, omega_fit, phi = p
    if amplitude < 0:
        amplitude, phi = -amplitude, phi + math.pi
    return DecayingSineFit(float(amplitude), float(gamma), float(omega_fit), float(phi % (2 * math.pi)), cov,
                           float(t_e), chi2, history, it, weighted)


def extract_sloshing(dataset, t_e=None, omega=None, tau=None):
    """In-situ sloshing from a :class:`~statransport.simulator.ProbeDataset`.

    Every repetition is fitted as its own point, weighted by the recorded
    ``noise_sigma`` when it is known and unweighted otherwise (covariance
    scaled by the reduced chi-square). Standard errors from a handful of
    repetitions are too noisy to serve as weights. The fitted in-situ phase
    is mapped to the residual convention of
    :func:`statransport.sloshing.sloshing_residual`:
    ``R = A exp(i (phi + pi/2 - omega t_f))``.

    Returns ``(SloshingResult, DecayingSineFit)``.
    """
    t_e = dataset.t_e if t_e is None else t_e
    sigma = dataset.noise_sigma if dataset.noise_sigma > 0 else None
    fit = fit_decaying_sine(dataset.t_wait, dataset.z_tof - dataset.origin, sigma, t_e, omega=omega, tau=tau)
    residual = fit.amplitude * np.exp(1j * (fit.phi + 0.5 * math.pi - fit.omega * dataset.t_stop))
    return SloshingResult(complex(residual)), fit
