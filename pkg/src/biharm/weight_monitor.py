"""Piecewise weights (xi, G) and the dissipation quantity N.

Every weight has the form xi = -Phi(f) / (A tau^{1/3}) with tau = T - t and a
profile Phi of the distance-like function f, and G = Lambda^2 Q(f)^2 /
(A^2 tau^{2/3}) with Q = Phi' wherever xi varies.  Derivatives in space follow
from the chain rule,

    grad xi   = -Phi'(f) f' / (A tau^{1/3}),
    Delta xi  = -(Phi''(f) |f'|^2 + Phi'(f) Delta f) / (A tau^{1/3}),
    |grad G|^2 / G = 4 Lambda^2 Q'(f)^2 |f'|^2 / (A^2 tau^{2/3}),

so N = d_t xi + C G^2 + C |grad G|^2 / G + C |Delta xi|^2 is evaluated in
closed form at every node, with exact zeros where the weight is flat.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import radial_solver as rs
from .warped_geometry import log_warp, ricci_lower_bound

VARIANTS = ("l2decay", "kernel", "uniqueness")
C_UNIVERSAL = 80.0


class HorizonError(ValueError):
    """The time horizon violates the variant's requirement on T."""


class CalibrationError(RuntimeError):
    """No admissible A up to 2^60."""


class DegenerateGError(RuntimeError):
    """G vanishes at a node where its gradient does not."""


@dataclass(frozen=True)
class WeightSpec:
    """Parameters of one weight.

    ``R1`` is the inner radius of the l2decay weight; ``S`` the band width of
    the kernel weight (the uniqueness weight uses S = R).  ``Lambda`` bounds
    |f'| and enters G; ``R0`` is the radius in the kernel horizon.
    """

    variant: str
    R: float
    T: float
    A: float = 1.0
    S: float = 1.0
    R1: float = 1.0
    Lambda: float = 1.0
    R0: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not (self.A > 0 and self.R > 0 and self.T > 0 and self.S > 0):
            raise ValueError("A, R, S and T must be positive")
        if self.variant == "l2decay" and not 0 < self.R1 < self.R:
            raise ValueError("l2decay needs 0 < R1 < R")

    @property
    def band(self):
        return self.R if self.variant == "uniqueness" else self.S

    def psi_coefficients(self):
        """(a, b) in psi = 1 + a (f-R1)(3R/2-f)^2 - b (f-R1)^2 (3R/2-f)."""
        R, R1 = self.R, self.R1
        D2 = (1.5 * R - R1) ** 2
        return (4.0 / 3.0) / ((2 * R - R1) * D2), (4.0 / 3.0) / (0.5 * R * D2)


def _psi(spec, f):
    a, b = spec.psi_coefficients()
    R1, c = spec.R1, 1.5 * spec.R
    u, v = f - R1, c - f
    p = 1 + a * u * v * v - b * u * u * v
    dp = a * (v * v - 2 * u * v) - b * (2 * u * v - u * u)
    ddp = a * (-4 * v + 2 * u) - b * (2 * v - 4 * u)
    return p, dp, ddp


def _pieces(spec):
    """[(lo, hi, fn)] with fn(f) -> (Phi, Phi', Phi'', Q, Q') on lo < f <= hi."""
    R = spec.R

    def const(value, q):
        def fn(f):
            z = np.zeros_like(f)
            return z + value, z, z.copy(), z + q, z.copy()
        return fn

    if spec.variant == "l2decay":
        R1 = spec.R1

        def mid(f):
            x = 2 * R - f
            p, dp, ddp = _psi(spec, f)
            P = x ** (4 / 3) * p
            P1 = -(4 / 3) * x ** (1 / 3) * p + x ** (4 / 3) * dp
            P2 = (4 / 9) * x ** (-2 / 3) * p - (8 / 3) * x ** (1 / 3) * dp + x ** (4 / 3) * ddp
            return P, P1, P2, P1, P2

        return [(-np.inf, R1, const((2 * R - R1) ** (4 / 3), (4 / 3) * (2 * R - R1) ** (1 / 3))),
                (R1, 1.5 * R, mid),
                (1.5 * R, np.inf, const((0.5 * R) ** (4 / 3), (4 / 3) * (0.5 * R) ** (1 / 3)))]
    S = spec.band
    c = S ** (-8 / 3)

    def band(f):
        # S^{-8/3} y^4 [1 - (8/3)(y - S)/S] = S^{-8/3} [(11/3) y^4 - (8/3) y^5 / S]
        y = f - R
        P = c * y ** 4 * (1 - (8 / 3) * (y - S) / S)
        P1 = c * y ** 3 * (4 - (32 / 3) * (y - S) / S - (8 / 3) * y / S)
        P2 = c * (44 * y ** 2 - (160 / 3) * y ** 3 / S)
        return P, P1, P2, P1, P2

    def outer(f):
        z = f - R
        P1 = (4 / 3) * z ** (1 / 3)
        P2 = (4 / 9) * z ** (-2 / 3)
        return z ** (4 / 3), P1, P2, P1, P2

    return [(-np.inf, R, const(0.0, 0.0)), (R, R + S, band), (R + S, np.inf, outer)]


def profile(spec, f):
    """Phi, Phi', Phi'', Q, Q' as arrays over f.

    xi = -Phi / (A tau^{1/3}) and G = Lambda^2 Q^2 / (A^2 tau^{2/3}).  Where xi
    varies Q = Phi'; on the flat inner and outer pieces of the l2decay weight
    G keeps the constant value of the paper's display.
    """
    f = np.asarray(f, dtype=float)
    out = [np.zeros_like(f) for _ in range(5)]
    for k, (lo, hi, fn) in enumerate(_pieces(spec)):
        m = (f > lo) & (f <= hi) if k else (f <= hi)
        if m.any():
            for arr, vals in zip(out, fn(f[m])):
                arr[m] = vals
    return tuple(out)


def exact_f(model, r):
    """(f, f', Delta f) for f = distance to the pole (or |r| on the line)."""
    r = np.asarray(r, dtype=float)
    f = np.abs(r)
    df = np.sign(r)
    df[r == 0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        _, d1, _ = log_warp(model, r)
        lap = (model.n - 1) * d1 * df
    lap = np.where(np.isfinite(lap), lap, 0.0)
    return f, df, lap


@dataclass
class WeightField:
    xi: np.ndarray
    G: np.ndarray
    grad_xi: np.ndarray
    lap_xi: np.ndarray
    gradG2_over_G: np.ndarray
    dt_xi: np.ndarray


def eval_weight(spec, model, r, t, fdata=None):
    """xi, G and their derived fields at time t < T on the nodes r."""
    if t >= spec.T:
        raise ValueError("t must be smaller than T")
    f, df, lapf = exact_f(model, r) if fdata is None else fdata
    tau = spec.T - t
    P, P1, P2, Q, Q1 = profile(spec, f)
    a1 = spec.A * tau ** (1 / 3)
    a2 = spec.A ** 2 * tau ** (2 / 3)
    xi = -P / a1
    grad = -P1 * df / a1
    lap = -(P2 * df * df + P1 * lapf) / a1
    L2 = spec.Lambda ** 2
    G = L2 * Q * Q / a2
    gradG = 2 * L2 * Q * Q1 * df / a2
    zero = G == 0
    if np.any(zero & (gradG != 0)):
        raise DegenerateGError("G = 0 with nonzero gradient")
    # |grad G|^2 / G = 4 Lambda^2 Q'^2 |f'|^2 / (A^2 tau^{2/3}); 0 where G = 0.
    g2g = np.where(zero, 0.0, 4 * L2 * Q1 * Q1 * df * df / a2)
    return WeightField(xi, G, grad, lap, g2g, xi / (3 * tau))


@dataclass
class DissipationField:
    values: np.ndarray
    max: float
    argmax: float


def eval_dissipation(spec, model, r, t, C_universal=C_UNIVERSAL, fdata=None):
    w = eval_weight(spec, model, r, t, fdata)
    N = w.dt_xi + C_universal * (w.G ** 2 + w.gradG2_over_G + w.lap_xi ** 2)
    i = int(np.argmax(N))
    return DissipationField(N, float(N[i]), float(np.asarray(r)[i]))


def horizon(spec, model, r_max=None):
    """Largest admissible T for the variant (the paper's requirement on T)."""
    K = lambda x: ricci_lower_bound(model, x)
    R = spec.R
    if spec.variant == "l2decay":
        return R / (1 + K(1.5 * R)) ** 1.5
    if spec.variant == "uniqueness":
        return R / (1 + K(4 * spec.Lambda * R)) ** 1.5
    S = spec.S
    top = r_max if r_max is not None else R + S + 50.0
    rr = np.linspace(R + S, max(top, R + S + 1e-9), 400)
    inf_term = float(np.min((rr - R) / (1 + np.asarray(K(rr))) ** 1.5))
    third = (R + S) ** 3 * S / (spec.R0 ** 3 * (1 + K(2 * spec.R0)) ** 1.5)
    return min(S ** 4, inf_term, third)


def check_horizon(spec, model, r_max=None):
    Tmax = horizon(spec, model, r_max)
    strict = spec.variant == "l2decay"
    bad = spec.T >= Tmax if strict else spec.T > Tmax
    if bad:
        raise HorizonError(f"T = {spec.T} violates the horizon bound {Tmax:.6g}")
    return Tmax


def time_lattice(T, samples=32, depth=1e-4):
    """t values with T - t geometric from T down to depth * T."""
    return T - np.geomspace(T, depth * T, samples)


def calibrate_A(spec, model, r, time_samples=None, C_universal=C_UNIVERSAL, fdata=None,
                rel_tol=1e-6):
    """Smallest A with max N <= 0 over the nodes and the time lattice.

    A N is decreasing in A, so the admissible set is a half-line; it is
    bracketed by doubling (or halving) from A = 1 and then bisected.
    Returns (A, trace) with trace a list of (A, max N) pairs.
    """
    try:
        check_horizon(spec, model, float(np.max(np.abs(r))))
    except HorizonError as exc:
        raise CalibrationError(str(exc)) from exc
    ts = time_lattice(spec.T) if time_samples is None else np.asarray(time_samples)
    trace = []

    def worst(A):
        s = replace(spec, A=A)
        m = max(eval_dissipation(s, model, r, t, C_universal, fdata).max for t in ts)
        trace.append((A, m))
        return m <= 0.0

    A = 1.0
    if worst(A):
        lo, hi = A, A
        while worst(lo):
            hi = lo
            lo /= 2.0
            if lo < 2.0 ** -60:
                return hi, trace
    else:
        lo = A
        while not worst(lo * 2.0):
            lo *= 2.0
            if lo > 2.0 ** 60:
                raise CalibrationError("no A <= 2^60 makes N nonpositive")
        hi = lo * 2.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if worst(mid):
            hi = mid
        else:
            lo = mid
    return hi, trace


def seam_check(spec):
    """Jumps of Phi and Phi' at each seam, evaluating both adjacent pieces there.

    Reported as |Delta xi| and |Delta d xi/df| at t = 0 for the spec's A.
    """
    pieces = _pieces(spec)
    scale = spec.A * spec.T ** (1 / 3)
    out = []
    for (_, s, left), (_, _, right) in zip(pieces[:-1], pieces[1:]):
        x = np.array([s])
        a, b = left(x), right(x)
        out.append((float(s), float(abs(a[0][0] - b[0][0]) / scale),
                    float(abs(a[1][0] - b[1][0]) / scale)))
    return out


def weighted_l2(disc, u, xi, cutoff=None):
    """sum w u^2 e^xi phi^2."""
    wt = np.exp(xi)
    if cutoff is not None:
        wt = wt * cutoff ** 2
    return float(np.dot(disc.weights, u * u * wt))


def monitor_weighted_l2(trajectory, spec, cutoff_phi=None, fdata=None):
    """Weighted L^2 integral at each snapshot and the largest relative rise."""
    disc = trajectory.disc
    vals = []
    times = []
    for s in trajectory.states:
        if s.t >= spec.T:
            break
        w = eval_weight(spec, disc.model, disc.r, s.t, fdata)
        vals.append(weighted_l2(disc, s.u, w.xi, cutoff_phi))
        times.append(s.t)
    vals = np.array(vals)
    rises = np.diff(vals) / np.maximum(vals[:-1], 1e-300) if vals.size > 1 else np.zeros(0)
    return {"t": np.array(times), "series": vals,
            "max_increase": float(rises.max()) if rises.size else 0.0}


def annulus_term(disc, u, xi, inner, outer, K, rho, C_universal=C_UNIVERSAL):
    """(C (1 + K) / rho^2) sum over inner < f <= outer of w u^2 e^xi."""
    f = np.abs(disc.r)
    m = (f > inner) & (f <= outer)
    return C_universal * (1 + K) / rho ** 2 * float(np.dot(disc.weights[m], u[m] ** 2 * np.exp(xi[m])))


def l2_decay_rhs(R, T, A, initial_l2):
    return math.exp(-R ** (4 / 3) / (2 * A * T ** (1 / 3))) * initial_l2


def check_l2_exp_decay(model, grid, init, R, T, A=None, dt=1e-3, R1=1.0, C_universal=C_UNIVERSAL):
    """Exterior L^2 at T/2 against exp(-R^{4/3} / (2 A T^{1/3})) times the initial L^2.

    A is calibrated for the l2decay weight when not given.
    """
    spec = WeightSpec("l2decay", R, T, S=1.0, R1=R1)
    try:
        check_horizon(spec, model)
    except HorizonError:
        raise
    disc = rs.build_discretization(model, grid)
    f = np.abs(disc.r)
    u0 = np.asarray(init, dtype=float)
    if np.any(u0[f > R] != 0):
        raise ValueError("initial data must be supported in D_R")
    trace = None
    if A is None:
        A, trace = calibrate_A(spec, model, disc.r, C_universal=C_universal)
    traj = rs.run(model, grid, u0, rs.Schedule(dt, T / 2, (T / 2,)), disc)
    uT = traj.states[-1].u
    out = f > 2 * R
    lhs = float(np.dot(disc.weights[out], uT[out] ** 2))
    ins = f <= R
    rhs = l2_decay_rhs(R, T, A, float(np.dot(disc.weights[ins], u0[ins] ** 2)))
    return {"check": "l2decay", "R": R, "T": T, "A": A, "lhs": lhs, "rhs": rhs,
            "pass": lhs <= rhs, "trace": trace}
