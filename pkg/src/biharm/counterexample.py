"""A bounded biharmonic function with Delta^2 F = 1 on a fast-growing warped line.

On the line with phi(r) = exp(|r|^{2+eps}) the nested integral

    F(r) = int_0^r phi^{1-n} int_0^s phi^{n-1} int_0^tau phi^{1-n} int_0^gamma phi^{n-1}

is bounded and satisfies Delta^2 F = 1, so v = F - t solves the biharmonic
heat equation with bounded initial data while ||v(t)||_inf grows linearly.

The levels are w1 = phi^{1-n} int phi^{n-1}, I2 = int w1, w3 = phi^{1-n} int
phi^{n-1} I2 and F = int w3, so that Delta I2 = 1 and Delta F = I2.  They
solve w1' = 1 - a w1, I2' = w1, w3' = I2 - a w3, F' = w3 with
a = (n-1)(2+eps) r^{1+eps}; the grid method in ``kernels.nested_levels``
integrates the exponential factors exactly in the log domain.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from . import radial_solver as rs
from .warped_geometry import RadialGrid, appendix, radial_laplacian


class RefinementError(RuntimeError):
    """Grid doubling did not reach the requested agreement."""


def default_rmax(n, epsilon, log_floor=-700.0):
    """Smallest r with (1-n) r^{2+eps} < log_floor, where exp underflows."""
    _check(n, epsilon)
    return (-log_floor / (n - 1)) ** (1.0 / (2.0 + epsilon))


def _check(n, epsilon):
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")


@dataclass
class NestedF:
    epsilon: float
    n: int
    r: np.ndarray
    F: np.ndarray
    F_sup: float
    w1: np.ndarray
    I2: np.ndarray
    w3: np.ndarray
    tail: float
    I2_inf: float
    refinement_error: float
    nodes: int

    @property
    def inf_F(self):
        return float(min(0.0, self.F.min()))


def _tail(n, epsilon, r0, state, r_end=1e12):
    """int_{r0}^inf w3 and lim I2, from the level ODEs in sigma = log r.

    Past r_end the quasi-steady forms w3 ~ I2 / a and I2 ~ const give the
    remainder I2 r^{-eps} / (b eps) with b = (n-1)(2+eps).
    """
    b = (n - 1) * (2.0 + epsilon)

    def rhs(s, y):
        r = math.exp(s)
        a = b * r ** (1.0 + epsilon)
        w1, i2, w3, _ = y
        return [r * (1.0 - a * w1), r * w1, r * (i2 - a * w3), r * w3]

    def jac(s, y):
        r = math.exp(s)
        a = b * r ** (1.0 + epsilon)
        return [[-r * a, 0, 0, 0], [r, 0, 0, 0], [0, r, -r * a, 0], [0, 0, r, 0]]

    sol = solve_ivp(rhs, (math.log(r0), math.log(r_end)), list(state), method="Radau", jac=jac,
                    rtol=1e-12, atol=1e-16)
    if not sol.success:
        raise RuntimeError(sol.message)
    w1, i2, w3, F = sol.y[:, -1]
    rest = i2 * r_end ** (-epsilon) / (b * epsilon)
    i2_inf = i2 + r_end ** (-epsilon) / (b * epsilon)
    return float(F - state[3] + rest), float(i2_inf)


def nested_F(epsilon=1.0, n=2, r_max=None, nodes=2001, rtol=1e-8, max_doublings=6):
    """The nested integral on a uniform grid over [0, r_max].

    The grid is doubled until every level agrees with the next finer grid to
    ``rtol`` relative to its maximum; the finer levels are returned.  F_sup
    is F(r_max) plus the tail of int w3 beyond r_max.
    """
    _check(n, epsilon)
    r_max = default_rmax(n, epsilon) if r_max is None else float(r_max)
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    N = int(nodes)
    if N < 16:
        raise ValueError("need at least 16 nodes")
    prev = kernels.nested_levels(np.linspace(0.0, r_max, N), int(n), float(epsilon))
    for _ in range(max_doublings):
        M = 2 * N - 1
        r = np.linspace(0.0, r_max, M)
        cur = kernels.nested_levels(r, int(n), float(epsilon))
        err = max(float(np.max(np.abs(c[::2] - p))) / max(float(np.max(np.abs(c))), 1e-300)
                  for c, p in zip(cur, prev))
        if not all(np.all(np.isfinite(c)) for c in cur):
            raise FloatingPointError("non-finite level values")
        if err <= rtol:
            break
        N, prev = M, cur
    else:
        raise RefinementError(f"levels changed by {err:.3g} after {max_doublings} doublings")
    w1, i2, w3, F = cur
    tail, i2_inf = _tail(n, epsilon, r_max, (w1[-1], i2[-1], w3[-1], F[-1]))
    return NestedF(float(epsilon), int(n), r, F, float(F[-1] + tail), w1, i2, w3, tail, i2_inf,
                   err, M)


def verify_bilaplacian_one(nf, model=None, nodes=None, window=(0.25, 0.75)):
    """max |Delta^2 F - 1| and max |Delta F - I2| on [0.25, 0.75 r_max].

    Both Laplacians are the divergence-form stencil of ``radial_laplacian``;
    with ``nodes`` the levels are first resampled on that many nodes by
    recomputing them there.
    """
    model = appendix(nf.n, nf.epsilon) if model is None else model
    if model.kind != "appendix" or model.n != nf.n or model.epsilon != nf.epsilon:
        raise ValueError("model must be the appendix model with the same (eps, n)")
    r, F, I2 = nf.r, nf.F, nf.I2
    if nodes is not None:
        r = np.linspace(0.0, r[-1], int(nodes))
        _, I2, _, F = kernels.nested_levels(r, nf.n, nf.epsilon)
    lapF = radial_laplacian(model, F, r)
    bilapF = radial_laplacian(model, lapF, r)
    lo, hi = window[0], window[1] * r[-1]
    m = (r >= lo) & (r <= hi)
    return {"check": "bilaplacian", "max_abs_residual": float(np.max(np.abs(bilapF[m] - 1.0))),
            "max_lap_minus_I2": float(np.max(np.abs(lapF[m] - I2[m]))),
            "nodes": int(r.size), "h": float(r[1] - r[0]), "r": r, "F": F, "lapF": lapF,
            "bilapF": bilapF}


def growth_run(nf, t_max=None, samples=50):
    """||F - t||_inf at evenly spaced t in [0, t_max] (default 10 F_sup).

    F ranges over [inf F, F_sup], so the norm is max(|F_sup - t|, |inf F - t|).
    """
    t_max = 10.0 * nf.F_sup if t_max is None else float(t_max)
    if not t_max > 2 * nf.F_sup:
        raise ValueError("t_max must exceed 2 F_sup")
    t = np.linspace(0.0, t_max, int(samples) + 1)
    linf = np.maximum(np.abs(nf.F_sup - t), np.abs(nf.inf_F - t))
    late = t >= 2 * nf.F_sup
    slopes = np.diff(linf[late]) / np.diff(t[late])
    return {"t": t, "linf": linf, "slope_min": float(slopes.min()), "slope_max": float(slopes.max())}


def solver_crosscheck(nf, r_end=3.0, nodes=601, t_end=1e-5, dt=1e-6, interior=(0.25, 1.0)):
    """Evolve u(0) = F with the radial solver; (u - F) / t should be -1 inside.

    The grid is [0, r_end] with a reflecting end at 0 and a clamped end at
    r_end; the clamped values stay at F(r_end) while the true solution moves,
    so only nodes well inside are compared.  The drift (n-1) phi'/phi of the
    warp carries that mismatch inward quickly, which is why the horizon is
    short.
    """
    model = appendix(nf.n, nf.epsilon)
    grid = RadialGrid(0.0, r_end, int(nodes), ("reflect", "clamped"))
    _, _, _, F = kernels.nested_levels(grid.r, nf.n, nf.epsilon)
    traj = rs.run(model, grid, F, rs.Schedule(dt, t_end, (t_end,)))
    rate = (traj.states[-1].u - F) / t_end
    m = (grid.r >= interior[0]) & (grid.r <= interior[1])
    return {"check": "solver_crosscheck", "max_deviation": float(np.max(np.abs(rate[m] + 1.0))),
            "t": t_end}
