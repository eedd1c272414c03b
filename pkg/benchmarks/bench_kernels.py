"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each case is run on both backends with identical inputs.  The script prints
the best wall time per backend, the speed-up, and the largest difference
between the two outputs relative to the output scale.
"""

import argparse
import timeit

import numpy as np

from biharm import kernels
from biharm import radial_solver as rs
from biharm import warped_geometry as wg


def _theta_case():
    model = wg.hyperbolic(2, 1.0)
    grid = wg.RadialGrid(0.0, 20.0, 2001, ("pole", "clamped"))
    disc = rs.build_discretization(model, grid)
    ab, ipiv = disc.factor(1e-3, 0.5)
    u0 = np.exp(-(disc.r - 5.0) ** 2)
    u0[disc.fixed] = 0.0
    rec = np.array([0, 100, 200], dtype=np.intp)
    return "theta_march", (ab, ipiv, disc.band, u0, disc.weights,
                           disc.fixed.astype(np.uint8), 1e-3, 0.5, 200, rec)


def cases():
    yield _theta_case()
    yield "nested_levels", (np.linspace(0.0, 36.0, 20001), 2, 1.0)
    yield "profile_direct", (3, np.linspace(0.0, 14.0, 400))
    yield "bessel_j", (0.5, np.linspace(0.0, 60.0, 200000))


def _diff(a, b):
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py = kernels.backend("python")
    try:
        cy = kernels.backend("compiled")
    except ImportError:
        print("compiled kernels are not built; nothing to compare")
        return 1
    print(f"{'kernel':16s} {'compiled s':>12s} {'python s':>12s} {'speed-up':>9s} {'rel diff':>10s}")
    for name, call_args in cases():
        f_cy, f_py = getattr(cy, name), getattr(py, name)
        t_cy = min(timeit.repeat(lambda: f_cy(*call_args), number=1, repeat=args.repeat))
        t_py = min(timeit.repeat(lambda: f_py(*call_args), number=1, repeat=args.repeat))
        d = _diff(f_cy(*call_args), f_py(*call_args))
        print(f"{name:16s} {t_cy:12.4g} {t_py:12.4g} {t_py / t_cy:9.1f} {d:10.2g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
