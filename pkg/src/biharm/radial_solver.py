"""Implicit theta-scheme for u_t + Delta^2 u = 0 on radial fields.

The bilaplacian is the square of the divergence-form Laplacian, so with the
cell volumes as quadrature weights it is symmetric positive semidefinite in the
weighted inner product and the discrete L^2 norm cannot grow for
theta in [1/2, 1].  Clamped ends hold u = 0 on the two outermost nodes.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np

from . import kernels
from .warped_geometry import RadialGrid, laplacian_stencil

__all__ = [
    "RadialGrid",
    "Discretization",
    "EvolutionState",
    "Trajectory",
    "Schedule",
    "build_discretization",
    "delta_init",
    "step",
    "run",
    "diagnose",
]


class IncompatibleTopologyError(ValueError):
    """The grid's boundary kinds do not fit the model."""


class WidthTooSmallError(ValueError):
    """A bump narrower than four grid spacings."""


class SingularSystemError(RuntimeError):
    """Banded factorization hit an exactly zero pivot."""


class NonFiniteError(RuntimeError):
    """The evolution produced NaN or inf."""

    def __init__(self, step_index):
        super().__init__(f"non-finite values at step {step_index}")
        self.step_index = step_index


@dataclass
class Discretization:
    """Grid, weights and banded operators for one model.

    ``lap`` holds the tridiagonal Laplacian as (lower, diag, upper) with
    L[i, i-1] = lower[i] and L[i, i+1] = upper[i].  ``band`` holds B = L L row
    by row: band[i, d] = B[i, i + d - 2].  Factorizations of I + theta dt B are
    cached per (dt, theta).
    """

    model: object
    grid: RadialGrid
    r: np.ndarray
    log_weights: np.ndarray
    weights: np.ndarray
    lap: tuple
    band: np.ndarray
    fixed: np.ndarray
    symmetry_residual: float
    _factors: dict = field(default_factory=dict, repr=False)

    @property
    def h(self):
        return self.grid.h

    def apply_L(self, u):
        lo, d, up = self.lap
        out = d * u
        out[1:] += lo[1:] * u[:-1]
        out[:-1] += up[:-1] * u[1:]
        return out

    def apply_B(self, u):
        return kernels.band_matvec(self.band, np.ascontiguousarray(u, dtype=float))

    def factor(self, dt, theta):
        key = (float(dt), float(theta))
        if key not in self._factors:
            ab = _system_band(self.band, self.fixed, theta * dt)
            ipiv, info = kernels.gbtrf(ab, 2, 2)
            if info != 0:
                raise SingularSystemError(f"zero pivot in row {info}")
            self._factors[key] = (ab, ipiv)
        return self._factors[key]


def _bilaplacian_band(lo, d, up):
    N = d.size
    band = np.zeros((N, 5))
    lo_prev = np.concatenate([[0.0], lo[:-1]])  # lo_{i-1}
    d_prev = np.concatenate([[0.0], d[:-1]])
    up_prev = np.concatenate([[0.0], up[:-1]])
    lo_next = np.concatenate([lo[1:], [0.0]])
    d_next = np.concatenate([d[1:], [0.0]])
    up_next = np.concatenate([up[1:], [0.0]])
    band[:, 0] = lo * lo_prev
    band[:, 1] = lo * d_prev + d * lo
    band[:, 2] = lo * up_prev + d * d + up * lo_next
    band[:, 3] = d * up + up * d_next
    band[:, 4] = up * up_next
    return band


def _system_band(band, fixed, c):
    """LAPACK band storage of I + c B with identity rows/columns at fixed nodes."""
    N = band.shape[0]
    ab = np.zeros((7, N), order="F")
    free = ~fixed
    for d in range(5):
        off = d - 2
        i = np.arange(max(0, -off), min(N, N - off))
        j = i + off
        vals = c * band[i, d] * (free[i] & free[j])
        ab[4 + i - j, j] = vals
    ab[4, :] += 1.0
    return ab


def build_discretization(model, grid):
    """Assemble weights, L and B for ``model`` on ``grid``."""
    left, right = grid.boundary
    if left == "pole" and model.topology != "pole":
        raise IncompatibleTopologyError("pole boundary needs a pole model")
    if model.topology == "pole":
        if grid.r_min < 0:
            raise IncompatibleTopologyError("grid extends past the pole")
        if grid.r_min == 0 and left != "pole":
            raise IncompatibleTopologyError("a grid starting at the pole must use a pole end")
    if "reflect" in grid.boundary and model.topology == "pole" and left == "reflect":
        raise IncompatibleTopologyError("reflecting end inside a pole model")
    r = grid.r
    lo, d, up, logv = laplacian_stencil(model, r)
    logw = logv + math.log(model.cross_section_volume)
    with np.errstate(over="ignore"):
        w = np.exp(logw)
    fixed = np.zeros(r.size, dtype=bool)
    if left == "clamped":
        fixed[:2] = True
    if right == "clamped":
        fixed[-2:] = True
    a = w[:-1] * up[:-1]
    b = w[1:] * lo[1:]
    ok = np.isfinite(a) & np.isfinite(b) & (a > 0)
    resid = float(np.max(np.abs(a[ok] - b[ok]) / a[ok])) if ok.any() else 0.0
    band = _bilaplacian_band(lo, d, up)
    return Discretization(model, grid, r, logw, w, (lo, d, up), band, fixed, resid)


class EvolutionState(NamedTuple):
    t: float
    u: np.ndarray
    step_index: int


class Diagnostics(NamedTuple):
    mass: float
    l2_norm: float
    linf_norm: float


@dataclass(frozen=True)
class Schedule:
    dt: float
    t_end: float
    output_times: tuple = ()
    theta: float = 0.5
    startup_steps: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if self.startup_steps < 0:
            raise ValueError("startup_steps must be nonnegative")
        if any(t < 0 or t > self.t_end * (1 + 1e-12) for t in self.output_times):
            raise ValueError("output times must lie in [0, t_end]")


@dataclass
class Trajectory:
    """Snapshots at the (snapped) output times and per-step diagnostics.

    ``snapping`` pairs each requested output time with the step time it was
    mapped to (nearest multiple of dt).  ``boundary_ratio`` is the largest
    |u| on the outermost free nodes next to a clamped end relative to the
    largest |u| anywhere, over all snapshots.
    """

    states: list
    times: np.ndarray
    mass: np.ndarray
    l2_norm: np.ndarray
    linf_norm: np.ndarray
    snapping: list
    boundary_ratio: float
    disc: Discretization = field(repr=False, default=None)

    def at(self, t):
        """Snapshot whose time is nearest to ``t``."""
        i = int(np.argmin([abs(s.t - t) for s in self.states]))
        return self.states[i]


def diagnose(disc, state):
    """Mass, weighted L^2 norm and max norm of a state (or a bare field)."""
    u = state.u if isinstance(state, EvolutionState) else np.asarray(state, dtype=float)
    w = disc.weights
    return Diagnostics(float(np.dot(w, u)), float(math.sqrt(np.dot(w, u * u))),
                       float(np.max(np.abs(u))) if u.size else 0.0)


def delta_init(disc, center, width):
    """Normalized smooth bump exp(-1/(1-x^2)), x = (r - center)/(4 width).

    Its support is [center - 4 width, center + 4 width] and its weighted sum
    is exactly 1.
    """
    h = disc.grid.h
    if width < 4 * h * (1 - 1e-12):
        raise WidthTooSmallError(f"width {width} below 4h = {4 * h}")
    left, right = disc.grid.boundary
    if left == "clamped" and center - disc.grid.r_min < 5 * width:
        raise ValueError("bump too close to the clamped left end")
    if right == "clamped" and disc.grid.r_max - center < 5 * width:
        raise ValueError("bump too close to the clamped right end")
    x = (disc.r - center) / (4.0 * width)
    u = np.zeros_like(x)
    inside = np.abs(x) < 1
    u[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    mass = np.dot(disc.weights[inside], u[inside])
    return u / mass


def step(disc, state, dt, theta=0.5):
    """One theta step: (I + theta dt B) u_new = (I - (1 - theta) dt B) u_old."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0.5 <= theta <= 1.0:
        raise ValueError("theta must lie in [1/2, 1]")
    ab, ipiv = disc.factor(dt, theta)
    u = np.array(state.u, dtype=float)
    if theta < 1.0:
        u = u - (1.0 - theta) * dt * disc.apply_B(u)
    u[disc.fixed] = 0.0
    kernels.gbtrs(ab, 2, 2, ipiv, u)
    return EvolutionState(state.t + dt, u, state.step_index + 1)


def _boundary_ratio(disc, snaps):
    left, right = disc.grid.boundary
    idx = []
    if left == "clamped":
        idx += [2, 3, 4]
    if right == "clamped":
        idx += [-3, -4, -5]
    if not idx or snaps.size == 0:
        return 0.0
    top = np.max(np.abs(snaps))
    return float(np.max(np.abs(snaps[:, idx])) / top) if top > 0 else 0.0


def run(model, grid, init, schedule, disc=None):
    """Evolve ``init`` and record snapshots at the snapped output times."""
    if disc is None:
        disc = build_discretization(model, grid)
    u0 = np.array(init, dtype=float)
    if u0.shape != disc.r.shape:
        raise ValueError("initial field does not match the grid")
    u0[disc.fixed] = 0.0
    dt = schedule.dt
    nsteps = int(round(schedule.t_end / dt))
    requested = sorted(set(schedule.output_times) | {0.0, schedule.t_end})
    ks = sorted({min(nsteps, int(round(t / dt))) for t in requested})
    snapping = [(t, min(nsteps, int(round(t / dt))) * dt) for t in requested]
    if nsteps == 0:
        d = diagnose(disc, u0)
        return Trajectory([EvolutionState(0.0, u0, 0)], np.array([0.0]), np.array([d.mass]),
                          np.array([d.l2_norm]), np.array([d.linf_norm]), snapping,
                          _boundary_ratio(disc, u0[None, :]), disc)
    # Rannacher start: for theta < 1 the first steps are replaced by pairs of
    # backward Euler half steps, which damp the stiff modes of rough data that
    # Crank-Nicolson would otherwise carry along undamped.
    k0 = min(schedule.startup_steps, nsteps) if schedule.theta < 1.0 else 0
    state = EvolutionState(0.0, u0, 0)
    head = [state]
    for k in range(1, k0 + 1):
        half = step(disc, state, 0.5 * dt, 1.0)
        state = EvolutionState(k * dt, step(disc, half, 0.5 * dt, 1.0).u, k)
        head.append(state)
    ab, ipiv = disc.factor(dt, schedule.theta)
    record = np.array([k - k0 for k in ks if k >= k0], dtype=np.intp)
    snaps, mass, l2, linf = kernels.theta_march(
        ab, ipiv, disc.band, np.ascontiguousarray(state.u), disc.weights,
        disc.fixed.astype(np.uint8), dt, schedule.theta, nsteps - k0, record)
    if k0:
        hd = [diagnose(disc, s) for s in head[:-1]]
        mass = np.concatenate([[d.mass for d in hd], mass])
        l2 = np.concatenate([[d.l2_norm for d in hd], l2])
        linf = np.concatenate([[d.linf_norm for d in hd], linf])
        early = [head[k].u for k in ks if k < k0]
        if early:
            snaps = np.vstack([np.array(early), snaps])
    bad = np.flatnonzero(~(np.isfinite(mass) & np.isfinite(l2)))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    states = [EvolutionState(k * dt, snaps[i], k) for i, k in enumerate(ks)]
    return Trajectory(states, dt * np.arange(nsteps + 1), mass, l2, linf, snapping,
                      _boundary_ratio(disc, snaps), disc)


def boundary_flux(disc, v):
    """Rate of change of mass, -sum_free w_i (B v)_i, from the end faces.

    Summing w (L g) over a contiguous block of free nodes telescopes to the
    fluxes through the two faces bounding the block, so this needs only the
    face densities and g = L v next to the clamped ends.
    """
    lo, d, up = disc.lap
    g = disc.apply_L(np.asarray(v, dtype=float))
    free = np.flatnonzero(~disc.fixed)
    a, b = free[0], free[-1]
    total = 0.0
    if b + 1 < disc.r.size:
        m = disc.weights[b] * up[b]
        total += m * (g[b + 1] - g[b])
    if a - 1 >= 0:
        m = disc.weights[a] * lo[a]
        total -= m * (g[a] - g[a - 1])
    return -total


def energy(disc, u, m):
    """(sum w (L^m u)^2)^{1/2}; m = 0 is the L^2 norm."""
    g = np.asarray(u, dtype=float)
    for _ in range(m):
        g = disc.apply_L(g)
    return float(math.sqrt(np.dot(disc.weights, g * g)))
