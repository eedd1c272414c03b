"""The Euclidean biharmonic heat kernel.

On R^n the kernel of d/dt + Delta^2 is self-similar,

    b(x, t) = alpha_n t^{-n/4} F_n(|x| / t^{1/4}),
    F_n(eta) = eta^{1-n} int_0^inf exp(-s^4) (eta s)^{n/2} J_{(n-2)/2}(eta s) ds.

``profile_F`` evaluates F_n by panel quadrature for moderate eta.  For large
eta the integrand oscillates over an envelope that is many orders of magnitude
larger than the result, so a fixed-precision real-axis sum cannot deliver
small relative error; there the integral is moved onto the horizontal line
through the two complex saddle points of exp(-s^4 + i eta s), where it is
non-oscillatory.  ``kernel_oracle`` is a separate evaluation through the
Fourier transform with scipy quadrature and shares no code with the above.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import integrate, optimize, special

from . import kernels

ETA_CONTOUR = 14.0


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(RuntimeError):
    """Adaptive quadrature failed to meet its tolerance."""


class ResolutionError(RuntimeError):
    """The sampling grid is too coarse for the requested analysis."""


class FitError(RuntimeError):
    """Too few data points for a meaningful fit."""


def _check_order(nu):
    if nu < -0.5:
        raise DomainError(f"unsupported Bessel order {nu}")
    if not (float(2 * nu).is_integer() or 0.0 <= nu <= 10.0):
        raise DomainError(f"unsupported Bessel order {nu}")


def bessel_j(nu, z):
    """J_nu(z) for real z >= 0.

    Half-integer orders use the spherical closed forms; otherwise the ascending
    series (z <= 8), an integral representation (moderate z) and the Hankel
    asymptotic expansion (large z).  Accepts a scalar or an array ``z``.
    """
    _check_order(nu)
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError("bessel_j needs finite z >= 0")
    out = kernels.bessel_j(float(nu), np.ascontiguousarray(arr))
    return float(out[0]) if np.ndim(z) == 0 else out


def sphere_area(n):
    """Surface measure of the unit sphere S^{n-1} in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n):
    """Volume omega_n of the Euclidean unit ball."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _derivative_terms(m):
    """Expand (-(1/eta) d/deta)^m as sum c * eta^p * d^j/deta^j.

    Returns a list of (c, p, j).  Odd-dimensional profiles follow from F_1
    this way since F_{n+2} = -F_n'/eta.
    """
    terms = {(0, 0): 1.0}
    for _ in range(m):
        new = {}
        for (p, j), c in terms.items():
            if p != 0:
                new[(p - 2, j)] = new.get((p - 2, j), 0.0) - c * p
            new[(p - 1, j + 1)] = new.get((p - 1, j + 1), 0.0) - c
        terms = new
    return [(c, p, j) for (p, j), c in terms.items() if c != 0.0]


def _profile_contour(n, eta):
    if n % 2 == 1:
        m = (n - 1) // 2
        moments = kernels.contour_odd(float(eta), m)
        return sum(c * eta ** p * moments[j] for c, p, j in _derivative_terms(m))
    return kernels.contour_even((n - 2) // 2, float(eta))


def profile_values(n, eta, tol=1e-10):
    """Vectorized F_n over an array of eta values."""
    if n < 1 or int(n) != n:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if np.any(eta < 0) or np.any(~np.isfinite(eta)):
        raise DomainError("eta must be finite and nonnegative")
    out = np.empty_like(eta)
    near = eta <= ETA_CONTOUR
    if near.any():
        vals, stalls = kernels.profile_direct(int(n), np.ascontiguousarray(eta[near]), tol)
        if stalls:
            raise ConvergenceError(f"panel refinement stalled on {stalls} panels")
        out[near] = vals
    for i in np.flatnonzero(~near):
        out[i] = _profile_contour(int(n), eta[i])
    return out


def profile_F(n, eta):
    """F_n(eta); at eta = 0 the limit Gamma(n/4) / (4 * 2^{(n-2)/2} Gamma(n/2))."""
    if eta < 0:
        raise DomainError("eta must be nonnegative")
    return float(profile_values(n, np.array([eta]))[0])


@lru_cache(maxsize=None)
def alpha(n):
    """Normalization alpha_n fixed numerically by int_{R^n} b(x, t) dx = 1."""
    edges = np.arange(0.0, 45.0 + 1e-12, 0.5)
    x, w = np.polynomial.legendre.leggauss(16)
    hw = 0.25
    nodes = (edges[:-1, None] + hw + hw * x).ravel()
    weights = np.tile(w * hw, edges.size - 1)
    radial = np.sum(weights * profile_values(n, nodes) * nodes ** (n - 1))
    return 1.0 / (sphere_area(n) * radial)


@dataclass(frozen=True)
class KernelProfile:
    n: int
    eta_grid: np.ndarray
    values: np.ndarray
    alpha_n: float

    def __post_init__(self):
        g = self.eta_grid
        if g[0] != 0.0 or np.any(np.diff(g) <= 0):
            raise ValueError("eta_grid must start at 0 and increase strictly")
        if not np.all(np.isfinite(self.values)) or self.values[0] <= 0:
            raise ValueError("profile values must be finite with F(0) > 0")

    def kernel(self, x_norm, t):
        """b(x, t) by linear interpolation in the table (for plotting and CSV)."""
        eta = np.asarray(x_norm, dtype=float) / t ** 0.25
        return self.alpha_n * t ** (-self.n / 4.0) * np.interp(eta, self.eta_grid, self.values)


def build_profile(n, eta_max, nodes):
    """Tabulate F_n on ``nodes`` equispaced points of [0, eta_max]."""
    grid = np.linspace(0.0, float(eta_max), int(nodes))
    return KernelProfile(int(n), grid, profile_values(n, grid), alpha(n))


def kernel_point(n, x_norm, t):
    """b(x, t) = alpha_n t^{-n/4} F_n(|x| t^{-1/4}); scalar or array x_norm."""
    if t <= 0:
        raise DomainError("t must be positive")
    x = np.asarray(x_norm, dtype=float)
    vals = alpha(n) * t ** (-n / 4.0) * profile_values(n, np.abs(x).ravel() / t ** 0.25)
    return float(vals[0]) if x.ndim == 0 else vals.reshape(x.shape)


def kernel_oracle(n, x_norm, t):
    """The kernel from its Fourier representation, for n in {1, 2, 3}.

    n = 1: (1/pi) int_0^inf exp(-k^4 t) cos(k x) dk  (QAWO cosine weight)
    n = 3: (1 / (2 pi^2 x)) int_0^inf k exp(-k^4 t) sin(k x) dk  (sine weight)
    n = 2: (1 / (2 pi)) int_0^inf k exp(-k^4 t) J_0(k x) dk, integrated
           piecewise between consecutive multiples of pi / x.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if n not in (1, 2, 3):
        raise DomainError("the oracle covers n = 1, 2, 3")
    x = abs(float(x_norm))
    with warnings.catch_warnings():
        # QUADPACK flags roundoff near the 1e-13 target; the values agree with
        # high-precision quadrature, so the warning is noise here.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _oracle(n, x, t)


def _oracle(n, x, t):
    kmax = (80.0 / t) ** 0.25
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=2000)

    def env(k, power):
        return k ** power * math.exp(-t * k ** 4)

    if x == 0.0:
        power = n - 1
        val = integrate.quad(env, 0.0, kmax, args=(power,), **opts)[0]
        return val / {1: math.pi, 2: 2.0 * math.pi, 3: 2.0 * math.pi ** 2}[n]
    if n == 1:
        val = integrate.quad(env, 0.0, kmax, args=(0,), weight="cos", wvar=x, **opts)[0]
        return val / math.pi
    if n == 3:
        val = integrate.quad(env, 0.0, kmax, args=(1,), weight="sin", wvar=x, **opts)[0]
        return val / (2.0 * math.pi ** 2 * x)
    breaks = np.append(np.arange(0.0, kmax, math.pi / x), kmax)
    total = math.fsum(
        integrate.quad(lambda k: env(k, 1) * special.j0(k * x), a, b, **opts)[0]
        for a, b in zip(breaks[:-1], breaks[1:])
    )
    return total / (2.0 * math.pi)


def sign_change_roots(n, eta_max, resolution):
    """Roots of F_n on (0, eta_max], each bisected to a bracket of width 1e-6."""
    if eta_max <= 0:
        raise DomainError("eta_max must be positive")
    if resolution < 1000:
        raise DomainError("resolution must be at least 1000")
    grid = np.linspace(0.0, float(eta_max), int(resolution) + 1)
    vals = profile_values(n, grid)
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if idx.size > 1 and np.min(np.diff(idx)) < 10:
        raise ResolutionError("adjacent roots closer than 10 grid cells; raise resolution")
    roots = []
    for i in idx:
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        while b - a > 1e-6:
            m = 0.5 * (a + b)
            fm = profile_F(n, m)
            if fm == 0.0:
                a = b = m
                break
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    return np.array(roots)


def count_sign_changes(n, eta_max, resolution):
    """Number of sign changes of F_n on (0, eta_max]."""
    return int(sign_change_roots(n, eta_max, resolution).size)


def envelope_maxima(n, eta_lo, eta_hi, step=0.02):
    """Local maxima of |F_n| strictly inside [eta_lo, eta_hi], refined."""
    grid = np.arange(eta_lo, eta_hi + 0.5 * step, step)
    a = np.abs(profile_values(n, grid))
    peaks = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])) + 1
    etas, amps = [], []
    for i in peaks:
        res = optimize.minimize_scalar(
            lambda e: -abs(profile_F(n, e)),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-9},
        )
        etas.append(res.x)
        amps.append(-res.fun)
    return np.array(etas), np.array(amps)


def _fit_envelope(eta, amp, shape_power):
    """Least squares for log amp = log C - shape_power log eta - c eta^p."""
    y = np.log(amp) + shape_power * np.log(eta)

    def model(e, logC, c, p):
        return logC - c * e ** p

    p0 = (float(y[0] + 0.3 * eta[0] ** (4 / 3)), 0.3, 4.0 / 3.0)
    (logC, c, p), _ = optimize.curve_fit(model, eta, y, p0=p0, maxfev=20000)
    return c, p, math.exp(logC)


def fit_decay_exponent(n, eta_lo, eta_hi, algebraic_prefactor=True):
    """Fit the upper envelope of |F_n| to C eta^{-q} exp(-c eta^p).

    The local maxima of |F_n| are fitted in log space.  With
    ``algebraic_prefactor`` the saddle-point amplitude eta^{-n/3} is held fixed
    in the model (q = n/3) and only (c, p, C) are free; otherwise q = 0.  The
    plain three-parameter fit is also returned as ``p_plain`` and ``c_plain``.
    """
    if not (3 <= eta_lo < eta_hi <= 40):
        raise DomainError("need 3 <= eta_lo < eta_hi <= 40")
    eta, amp = envelope_maxima(n, eta_lo, eta_hi)
    if eta.size < 5:
        raise FitError(f"only {eta.size} envelope points in [{eta_lo}, {eta_hi}]")
    q = n / 3.0 if algebraic_prefactor else 0.0
    c, p, C = _fit_envelope(eta, amp, q)
    c0, p0, C0 = _fit_envelope(eta, amp, 0.0)
    fitted = C * eta ** (-q) * np.exp(-c * eta ** p)
    ratio = amp / fitted
    return {
        "c": c,
        "p": p,
        "C": C,
        "q": q,
        "p_plain": p0,
        "c_plain": c0,
        "C_plain": C0,
        "points": int(eta.size),
        "max_ratio": float(max(ratio.max(), 1.0 / ratio.min())),
        "eta": eta,
        "amp": amp,
    }
