"""Pure-numpy fallback for the compiled RK4 kernels in ``_kernels.pyx``."""
import math

import numpy as np

HARMONIC, QUARTIC, GAUSSIAN = 0, 1, 2


def _accel(x, w2, inv_zr2, model):
    if model == HARMONIC:
        return -w2 * x
    if model == QUARTIC:
        return -w2 * x * (1.0 - 2.0 * x * x * inv_zr2)
    q = 1.0 + x * x * inv_zr2
    return -w2 * x / (q * q)


def rk4_path(z0, v0, trap, h, w2, inv_zr2, model, escape):
    """Integrate one particle over ``(len(trap) - 1) // 2`` steps.

    ``trap`` holds the trap centre at every half step. Returns ``(z, v, n)``
    where ``n`` is the number of completed steps.
    """
    trap = np.asarray(trap, dtype=float)
    nsteps = (trap.shape[0] - 1) // 2
    zs = np.empty(nsteps + 1)
    vs = np.empty(nsteps + 1)
    z = float(z0)
    v = float(v0)
    zs[0] = z
    vs[0] = v
    hh = 0.5 * h
    acc = _accel
    c = trap.tolist()
    done = nsteps
    for k in range(nsteps):
        c0, c1, c2 = c[2 * k], c[2 * k + 1], c[2 * k + 2]
        k1z = v
        k1v = acc(z - c0, w2, inv_zr2, model)
        k2z = v + hh * k1v
        k2v = acc(z + hh * k1z - c1, w2, inv_zr2, model)
        k3z = v + hh * k2v
        k3v = acc(z + hh * k2z - c1, w2, inv_zr2, model)
        k4z = v + h * k3v
        k4v = acc(z + h * k3z - c2, w2, inv_zr2, model)
        z = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        zs[k + 1] = z
        vs[k + 1] = v
        if not (math.isfinite(z) and math.isfinite(v)) or abs(z - c2) > escape:
            done = k + 1
            break
    return zs[:done + 1], vs[:done + 1], done


def rk4_ensemble(z, v, alive, trap, h, w2, inv_zr2, model, escape):
    """Advance every live particle in place; return the number of new escapes."""
    trap = np.asarray(trap, dtype=float)
    nsteps = (trap.shape[0] - 1) // 2
    idx = np.flatnonzero(alive)
    zz = z[idx]
    vv = v[idx]
    live = np.ones(idx.size, dtype=bool)
    hh = 0.5 * h
    for k in range(nsteps):
        c0, c1, c2 = trap[2 * k], trap[2 * k + 1], trap[2 * k + 2]
        k1z = vv
        k1v = _accel(zz - c0, w2, inv_zr2, model)
        k2z = vv + hh * k1v
        k2v = _accel(zz + hh * k1z - c1, w2, inv_zr2, model)
        k3z = vv + hh * k2v
        k3v = _accel(zz + hh * k2z - c1, w2, inv_zr2, model)
        k4z = vv + h * k3v
        k4v = _accel(zz + h * k3z - c2, w2, inv_zr2, model)
        zn = zz + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        vn = vv + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        # escaped particles keep their last finite state
        zz = np.where(live, zn, zz)
        vv = np.where(live, vn, vv)
        bad = live & (~np.isfinite(zz) | ~np.isfinite(vv) | (np.abs(zz - c2) > escape))
        live &= ~bad
    z[idx] = zz
    v[idx] = vv
    lost = int(np.count_nonzero(~live))
    alive[idx[~live]] = 0
    return lost
