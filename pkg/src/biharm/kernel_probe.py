"""Numerical biharmonic heat kernels on model geometries, and checks on them.

A kernel estimate is the evolution of a normalized bump of width w, combined
over the widths w and 2w as (4 E(w) - E(2w)) / 3 to cancel the leading
second-moment bias of the mollifier.
"""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np
from scipy import optimize

from . import euclid_kernel as ek
from . import radial_solver as rs
from .warped_geometry import volume_report


class LeakExceededError(RuntimeError):
    """The solution reached the clamped ends; enlarge the domain."""


class InsufficientEnvelopeError(RuntimeError):
    """Fewer than five envelope maxima in the fit window."""


class WindowError(ValueError):
    """A requested space-time window is not covered by the trajectory."""


class Quality(NamedTuple):
    boundary_leak: float
    mass_defect: float


@dataclass
class KernelEstimate:
    model: object
    t: float
    center: float
    r: np.ndarray
    field: np.ndarray
    quality: Quality
    disc: object
    raw: tuple = ()


def estimate_kernel(model, grid, t, center=0.0, width_policy=(4.0, 8.0), dt=1e-3,
                    theta=0.5, leak_tol=1e-10, disc=None):
    """Kernel b(center, ., t) from two bump evolutions and Richardson.

    ``width_policy`` gives the two bump widths in units of the grid spacing;
    the second must be twice the first.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    a, b = width_policy
    if abs(b - 2 * a) > 1e-12:
        raise ValueError("width_policy must be (w, 2w)")
    if disc is None:
        disc = rs.build_discretization(model, grid)
    h = grid.h
    fields = []
    for m in (a, b):
        u0 = rs.delta_init(disc, center, m * h)
        traj = rs.run(model, grid, u0, rs.Schedule(dt, t, (t,), theta), disc)
        fields.append(traj.states[-1].u)
    u = (4.0 * fields[0] - fields[1]) / 3.0
    linf = float(np.max(np.abs(u)))
    leak = rs._boundary_ratio(disc, u[None, :]) * linf
    if leak > leak_tol * linf:
        raise LeakExceededError(f"boundary leak {leak:.3g} exceeds {leak_tol:g} of max")
    mass = float(np.dot(disc.weights, u))
    return KernelEstimate(model, float(t), float(center), disc.r, u,
                          Quality(leak, abs(mass - 1.0)), disc, tuple(fields))


def check_conservation(estimate, tol=1e-3):
    """Total mass of an estimate; passes when |mass - 1| <= tol."""
    mass = float(np.dot(estimate.disc.weights, estimate.field))
    return {"check": "conservation", "mass": mass, "tol": tol, "pass": abs(mass - 1.0) <= tol}


def closed_form_mass(n, t, eta_max=45.0):
    """|S^{n-1}| int_0^inf b(r, t) r^{n-1} dr for the Euclidean kernel."""
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.arange(0.0, eta_max + 1e-12, 0.5)
    eta = (edges[:-1, None] + 0.25 + 0.25 * x).ravel()
    wts = np.tile(0.25 * w, edges.size - 1)
    r = eta * t ** 0.25
    vals = ek.kernel_point(n, r, t) * r ** (n - 1)
    return ek.sphere_area(n) * t ** 0.25 * float(np.sum(wts * vals))


def check_conservation_closed_form(n, t, tol=1e-8):
    mass = closed_form_mass(n, t)
    return {"check": "conservation", "mass": mass, "tol": tol, "pass": abs(mass - 1.0) <= tol}


class DecayFitReport(NamedTuple):
    p: float
    c: float
    prefactor: float
    window: tuple
    residual: float
    points: int
    p_plain: float
    prefactor_ratio_max: float
    prefactor_ratio_min: float


def _envelope(d, b):
    """Local maxima of |b| on the grid, refined by a parabola through 3 nodes."""
    a = np.abs(b)
    idx = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])) + 1
    dd, aa = [], []
    h = d[1] - d[0]
    for i in idx:
        y0, y1, y2 = np.log(a[i - 1]), np.log(a[i]), np.log(a[i + 1])
        den = y0 - 2 * y1 + y2
        s = 0.5 * (y0 - y2) / den if den < 0 else 0.0
        dd.append(d[i] + s * h)
        aa.append(math.exp(y1 - 0.25 * (y0 - y2) * s))
    return np.array(dd), np.array(aa)


def check_kernel_decay(estimate, noise_floor=1e-8, shape_power=None):
    """Fit the envelope of |b| to C (d/t^{1/4})^{-q} exp(-c d^p / t^{1/3}).

    Maxima are taken beyond 3 t^{1/4} from the center and above
    ``noise_floor`` times the peak.  ``shape_power`` q defaults to n/3, the
    algebraic amplitude of the Euclidean envelope.
    """
    t = estimate.t
    d = np.abs(estimate.r - estimate.center)
    side = estimate.r >= estimate.center
    order = np.argsort(d[side])
    dist = d[side][order]
    vals = estimate.field[side][order]
    peak = np.max(np.abs(estimate.field))
    dm, am = _envelope(dist, vals)
    keep = (dm > 3 * t ** 0.25) & (am > noise_floor * peak)
    dm, am = dm[keep], am[keep]
    if dm.size < 5:
        raise InsufficientEnvelopeError(f"{dm.size} envelope maxima in the window")
    n = estimate.model.n
    q = n / 3.0 if shape_power is None else shape_power
    eta = dm / t ** 0.25
    y = np.log(am) + q * np.log(eta)

    def model(x, logC, c, p):
        return logC - c * x ** p / t ** (1.0 / 3.0)

    p0 = (float(y[0]), 0.3, 4.0 / 3.0)
    (logC, c, p), _ = optimize.curve_fit(model, dm, y, p0=p0, maxfev=20000)
    resid = float(np.max(np.abs(model(dm, logC, c, p) - y)))
    (_, _, pp), _ = optimize.curve_fit(model, dm, np.log(am), p0=p0, maxfev=20000)
    V = volume_report(estimate.model, t ** 0.25).V
    ratio = am * V * np.exp(c * dm ** p / t ** (1.0 / 3.0))
    return DecayFitReport(float(p), float(c), math.exp(logC), (float(dm[0]), float(dm[-1])),
                          resid, int(dm.size), float(pp), float(ratio.max()), float(ratio.min()))


def _ball_mask(disc, radius):
    return np.abs(disc.r) <= radius * (1 + 1e-12)


def check_mean_value(model, trajectory, ball_radius, t, Lambda=2.0):
    """Mean value ratio sup_{Q_{r/2}} |u| / [(r^2 sqrt V(2 Lambda r))^{-1} ||u||_{L^2(Q_r)}].

    Q_r is the ball of radius r about the pole (or the slab |s| <= r on the
    line) times the window [t - r^4, t].  The space-time integral uses the
    trapezoid rule over the trajectory snapshots inside the window.
    """
    r = float(ball_radius)
    disc = trajectory.disc
    times = np.array([s.t for s in trajectory.states])
    lo = t - r ** 4
    tol = 1e-9 * max(1.0, t)
    if lo < times[0] - tol or t > times[-1] + tol:
        raise WindowError(f"[{lo}, {t}] is not covered by the trajectory")
    win = (times >= lo - tol) & (times <= t + tol)
    if win.sum() < 2:
        raise WindowError("fewer than two snapshots in the window")
    ts = times[win]
    U = np.array([s.u for s, k in zip(trajectory.states, win) if k])
    mask = _ball_mask(disc, r)
    space = np.array([np.dot(disc.weights[mask], u[mask] ** 2) for u in U])
    integral = float(np.trapezoid(space, ts))
    half_t = ts >= t - (r / 2) ** 4 - tol
    lhs = float(np.max(np.abs(U[half_t][:, _ball_mask(disc, r / 2)])))
    V = volume_report(model, 2 * Lambda * r).V
    rhs = math.sqrt(integral) / (r ** 2 * math.sqrt(V))
    nu = volume_report(model, r).nu
    shape = math.sqrt(1.0 - math.log(nu)) + r ** 2 / math.sqrt(t) if nu == nu else float("nan")
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else float("inf"))
    return {"check": "meanvalue", "lhs": lhs, "rhs": rhs, "ratio": ratio, "shape": shape,
            "Lambda": Lambda}


def random_bumps(grid, seed, count=4, span=None):
    """Sum of ``count`` bumps with random centers, widths and signed heights."""
    rng = np.random.default_rng(seed)
    r = grid.r
    lo, hi = span if span is not None else (r[0], r[-1])
    u = np.zeros_like(r)
    for _ in range(count):
        c = rng.uniform(lo, hi)
        w = rng.uniform(0.5, 2.0)
        a = rng.uniform(-1.0, 1.0)
        x = (r - c) / w
        inside = np.abs(x) < 1
        u[inside] += a * np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return u


def check_linfty_contraction(model, grid, init, horizon=1.0, dt=1e-3, samples=50, bound=None,
                             theta=0.5):
    """sup over output times of ||u(t)||_inf / ||u(0)||_inf.

    ``bound`` is the recorded constant to compare against; without it the
    check only reports the ratio.
    """
    times = tuple(np.linspace(0.0, horizon, samples + 1))
    traj = rs.run(model, grid, init, rs.Schedule(dt, horizon, times, theta))
    u0 = np.max(np.abs(traj.states[0].u))
    ratios = np.array([np.max(np.abs(s.u)) / u0 for s in traj.states])
    sup = float(ratios.max())
    out = {"check": "linfty", "sup_ratio_over_time": sup, "ratios": ratios,
           "times": np.array([s.t for s in traj.states]), "boundary_ratio": traj.boundary_ratio}
    if bound is not None:
        out["bound"] = bound
        out["pass"] = sup <= bound
    return out
