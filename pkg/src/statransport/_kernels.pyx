# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step RK4 kernels for a particle in a moving 1-D trap.

Mirrors ``_kernels_py`` operation for operation; the two must stay in sync.
"""
import numpy as np
from libc.math cimport fabs, isfinite


cdef inline double _accel(double x, double w2, double inv_zr2, int model) noexcept nogil:
    cdef double q
    if model == 0:
        return -w2 * x
    elif model == 1:
        return -w2 * x * (1.0 - 2.0 * x * x * inv_zr2)
    q = 1.0 + x * x * inv_zr2
    return -w2 * x / (q * q)


cdef inline void _step(double *z, double *v, double c0, double c1, double c2,
                       double h, double w2, double inv_zr2, int model) noexcept nogil:
    cdef double zz = z[0]
    cdef double vv = v[0]
    cdef double hh = 0.5 * h
    cdef double k1z = vv
    cdef double k1v = _accel(zz - c0, w2, inv_zr2, model)
    cdef double k2z = vv + hh * k1v
    cdef double k2v = _accel(zz + hh * k1z - c1, w2, inv_zr2, model)
    cdef double k3z = vv + hh * k2v
    cdef double k3v = _accel(zz + hh * k2z - c1, w2, inv_zr2, model)
    cdef double k4z = vv + h * k3v
    cdef double k4v = _accel(zz + h * k3z - c2, w2, inv_zr2, model)
    z[0] = zz + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    v[0] = vv + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)


def rk4_path(double z0, double v0, const double[::1] trap, double h,
             double w2, double inv_zr2, int model, double escape):
    """Integrate one particle over ``(len(trap) - 1) // 2`` steps.

    ``trap`` holds the trap centre at every half step. Returns ``(z, v, n)``
    where ``n`` is the number of completed steps (less than requested when the
    particle escapes).
    """
    cdef Py_ssize_t nsteps = (trap.shape[0] - 1) // 2
    zs_arr = np.empty(nsteps + 1)
    vs_arr = np.empty(nsteps + 1)
    cdef double[::1] zs = zs_arr
    cdef double[::1] vs = vs_arr
    cdef double z = z0
    cdef double v = v0
    cdef Py_ssize_t k
    cdef Py_ssize_t done = nsteps
    zs[0] = z
    vs[0] = v
    with nogil:
        for k in range(nsteps):
            _step(&z, &v, trap[2 * k], trap[2 * k + 1], trap[2 * k + 2],
                  h, w2, inv_zr2, model)
            zs[k + 1] = z
            vs[k + 1] = v
            if not (isfinite(z) and isfinite(v)) or fabs(z - trap[2 * k + 2]) > escape:
                done = k + 1
                break
    return zs_arr[:done + 1], vs_arr[:done + 1], int(done)


def rk4_ensemble(double[::1] z, double[::1] v, unsigned char[::1] alive,
                 const double[::1] trap, double h, double w2, double inv_zr2,
                 int model, double escape):
    """Advance every live particle in place; return the number of new escapes."""
    cdef Py_ssize_t nsteps = (trap.shape[0] - 1) // 2
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, k
    cdef int lost = 0
    cdef double zi, vi
    with nogil:
        for i in range(n):
            if not alive[i]:
                continue
            zi = z[i]
            vi = v[i]
            for k in range(nsteps):
                _step(&zi, &vi, trap[2 * k], trap[2 * k + 1], trap[2 * k + 2],
                      h, w2, inv_zr2, model)
                if not (isfinite(zi) and isfinite(vi)) or fabs(zi - trap[2 * k + 2]) > escape:
                    alive[i] = 0
                    lost += 1
                    break
            z[i] = zi
            v[i] = vi
    return lost
