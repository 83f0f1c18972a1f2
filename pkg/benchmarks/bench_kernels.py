"""Time the compiled RK4 kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--steps 20000] [--particles 2000] [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from statransport import _kernels_py
from statransport.kernels import MODEL_CODES

try:
    from statransport import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _inputs(steps, particles, seed=0):
    omega0 = 2 * math.pi * 7.16
    h = 2 * math.pi / (omega0 * 1000)
    t = np.linspace(0.0, steps * h, 2 * steps + 1)
    trap = np.ascontiguousarray(1e-3 * np.sin(0.5 * omega0 * t) ** 2)
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, 2e-4, particles)
    v = rng.normal(0.0, 5e-3, particles)
    return trap, h, omega0**2, 1.0 / 1.117e-3**2, z, v


def bench(impl, steps, particles, repeat, model):
    trap, h, w2, inv_zr2, z, v = _inputs(steps, particles)
    code = MODEL_CODES[model]

    def path():
        impl.rk4_path(0.0, 0.0, trap, h, w2, inv_zr2, code, 1.0)

    def ensemble():
        impl.rk4_ensemble(z.copy(), v.copy(), np.ones(z.size, dtype=np.uint8), trap, h, w2, inv_zr2, code, 1.0)

    return (min(timeit.repeat(path, number=1, repeat=repeat)),
            min(timeit.repeat(ensemble, number=1, repeat=repeat)))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--particles", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--model", choices=sorted(MODEL_CODES), default="full-gaussian")
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if compiled is not None:
        backends.append(("cython", compiled))
    else:
        print("compiled kernels not built; timing the fallback only")
    print(f"{args.steps} steps, {args.particles} particles, model {args.model}, best of {args.repeat}")
    print(f"{'backend':<8} {'path (s)':>10} {'steps/s':>12} {'ensemble (s)':>13} {'particle-steps/s':>17}")
    timings = {}
    for name, impl in backends:
        t_path, t_ens = bench(impl, args.steps, args.particles, args.repeat, args.model)
        timings[name] = (t_path, t_ens)
        print(f"{name:<8} {t_path:>10.4f} {args.steps / t_path:>12.3e} {t_ens:>13.4f} "
              f"{args.steps * args.particles / t_ens:>17.3e}")
    if len(timings) == 2:
        print(f"speed-up: path x{timings['python'][0] / timings['cython'][0]:.1f}, "
              f"ensemble x{timings['python'][1] / timings['cython'][1]:.1f}")


if __name__ == "__main__":
    main()
