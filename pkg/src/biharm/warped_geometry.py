"""Radially symmetric model geometries ds^2 = dr^2 + phi(r)^2 ds_N^2.

Everything radial reduces to the measure phi^{n-1} dr and the operator
phi^{1-n} (phi^{n-1} f')'.  The warp of the appendix model grows like
exp(r^{2+eps}), so the measure is handled through log(phi) throughout.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .euclid_kernel import ball_volume, sphere_area

KINDS = ("euclidean", "hyperbolic", "appendix", "custom")
END_KINDS = ("pole", "clamped", "reflect")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class DomainError(ValueError):
    """Radius outside the model's domain."""


class GridTooCoarseError(ValueError):
    """Fewer nodes than a stencil needs."""


@dataclass(frozen=True)
class WarpModel:
    """A warped-product geometry of dimension n.

    ``topology`` is "pole" (r >= 0, phi(0) = 0, phi'(0) = 1) or "line"
    (r real, phi even and positive).  For the flat line (euclidean, n = 1) the
    measure is dr and phi plays no role, so it is taken to be 1.
    """

    n: int
    kind: str = "euclidean"
    K: float = 0.0
    epsilon: float = 1.0
    topology: str = "pole"
    cross_section_volume: float = 1.0
    spline: Optional[CubicSpline] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if self.topology not in ("pole", "line"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.K < 0 or self.epsilon <= 0 or self.cross_section_volume <= 0:
            raise ValueError("need K >= 0, epsilon > 0, positive cross-section volume")
        if self.kind == "custom" and self.spline is None:
            raise ValueError("custom models need a spline")
        if self.kind == "appendix" and self.topology != "line":
            raise ValueError("the appendix model lives on the line")
        if self.kind in ("euclidean", "hyperbolic") and self.n >= 2 and self.topology != "pole":
            raise ValueError(f"{self.kind} models with n >= 2 have a pole")

    @property
    def flat_line(self):
        return self.n == 1 or (self.kind == "euclidean" and self.topology == "line")


def euclidean(n):
    if n == 1:
        return WarpModel(1, "euclidean", topology="line", cross_section_volume=1.0)
    return WarpModel(n, "euclidean", cross_section_volume=sphere_area(n))


def hyperbolic(n, K=1.0):
    return WarpModel(n, "hyperbolic", K=float(K), cross_section_volume=sphere_area(n))


def appendix(n, epsilon=1.0, cross_section_volume=1.0):
    return WarpModel(n, "appendix", epsilon=float(epsilon), topology="line",
                     cross_section_volume=cross_section_volume)


def custom(n, r, phi, topology="pole", cross_section_volume=None):
    """Model from sampled phi; a cubic spline supplies phi' and phi''."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if topology == "pole":
        if abs(r[0]) > 1e-14 or abs(phi[0]) > 1e-8:
            raise ValueError("pole topology needs phi(0) = 0")
    elif np.any(phi <= 0):
        raise ValueError("line topology needs phi > 0")
    sp = CubicSpline(r, phi)
    if topology == "pole" and abs(sp(0.0, 1) - 1.0) > 1e-4:
        raise ValueError("pole topology needs phi'(0) = 1")
    vol = sphere_area(n) if cross_section_volume is None else cross_section_volume
    return WarpModel(n, "custom", topology=topology, cross_section_volume=vol, spline=sp)


class Warp(NamedTuple):
    phi: np.ndarray
    dphi: np.ndarray
    ddphi: np.ndarray


def _check_domain(model, r):
    if model.topology == "pole" and np.any(r < 0):
        raise DomainError("pole models are defined for r >= 0")
    if np.any(~np.isfinite(r)):
        raise DomainError("radius must be finite")


def warp_eval(model, r):
    """phi, phi', phi'' at r (closed forms for the built-in kinds)."""
    rr = np.asarray(r, dtype=float)
    _check_domain(model, rr)
    if model.flat_line:
        one = np.ones_like(rr)
        out = Warp(one, 0.0 * one, 0.0 * one)
    elif model.kind == "euclidean":
        out = Warp(rr.copy(), np.ones_like(rr), np.zeros_like(rr))
    elif model.kind == "hyperbolic":
        if model.K == 0:
            out = Warp(rr.copy(), np.ones_like(rr), np.zeros_like(rr))
        else:
            s = math.sqrt(model.K)
            out = Warp(np.sinh(s * rr) / s, np.cosh(s * rr), s * np.sinh(s * rr))
    elif model.kind == "appendix":
        e = model.epsilon
        a = np.abs(rr)
        phi = np.exp(a ** (2 + e))
        dphi = (2 + e) * a ** (1 + e) * np.sign(rr) * phi
        ddphi = ((2 + e) * (1 + e) * a ** e + (2 + e) ** 2 * a ** (2 + 2 * e)) * phi
        out = Warp(phi, dphi, ddphi)
    else:
        sp = model.spline
        out = Warp(sp(rr), sp(rr, 1), sp(rr, 2))
    if np.ndim(r) == 0:
        return Warp(*(float(v) for v in out))
    return out


def log_warp(model, r):
    """(log phi, phi'/phi, phi''/phi), safe where phi itself overflows.

    At a pole r = 0 the log is -inf and the ratios are reported as their
    leading singular values (inf); callers only use them at r > 0.
    """
    rr = np.asarray(r, dtype=float)
    _check_domain(model, rr)
    with np.errstate(divide="ignore", invalid="ignore"):
        if model.flat_line:
            z = np.zeros_like(rr)
            return z, z.copy(), z.copy()
        if model.kind == "appendix":
            e = model.epsilon
            a = np.abs(rr)
            return (a ** (2 + e), (2 + e) * a ** (1 + e) * np.sign(rr),
                    (2 + e) * (1 + e) * a ** e + (2 + e) ** 2 * a ** (2 + 2 * e))
        if model.kind == "euclidean" or (model.kind == "hyperbolic" and model.K == 0):
            return np.log(rr), 1.0 / rr, np.zeros_like(rr)
        if model.kind == "hyperbolic":
            s = math.sqrt(model.K)
            x = s * rr
            small = x < 1.0
            xs = np.where(small, x, 1.0)
            xb = np.where(small, 1.0, x)
            shc = np.where(xs > 0, np.sinh(xs) / np.where(xs > 0, xs, 1.0), 1.0)
            logphi = np.where(small, np.log(rr) + np.log(shc),
                              xb + np.log1p(-np.exp(-2 * xb)) - math.log(2 * s))
            return logphi, s / np.tanh(x), np.full_like(rr, model.K)
        sp = model.spline
        phi = sp(rr)
        return np.log(phi), sp(rr, 1) / phi, sp(rr, 2) / phi


def measure_exponent(model, r):
    """log of the radial density phi^{n-1} (0 for the flat line)."""
    if model.n == 1:
        return np.zeros_like(np.asarray(r, dtype=float))
    return (model.n - 1) * log_warp(model, r)[0]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on [r_min, r_max] with a boundary kind at each end."""

    r_min: float
    r_max: float
    node_count: int
    boundary: tuple = ("pole", "clamped")

    def __post_init__(self):
        if self.node_count < 16:
            raise GridTooCoarseError("a RadialGrid needs at least 16 nodes")
        if not self.r_max > self.r_min:
            raise ValueError("need r_max > r_min")
        left, right = self.boundary
        if left not in END_KINDS or right not in END_KINDS or right == "pole":
            raise ValueError(f"bad boundary {self.boundary!r}")
        if left == "pole" and self.r_min != 0.0:
            raise ValueError("a pole boundary needs r_min = 0")

    @property
    def h(self):
        return (self.r_max - self.r_min) / (self.node_count - 1)

    @property
    def r(self):
        return np.linspace(self.r_min, self.r_max, self.node_count)

    def check_model(self, model):
        if self.boundary[0] == "pole" and model.topology != "pole":
            raise ValueError("pole boundary on a model without a pole")
        if model.topology == "pole" and self.r_min < 0:
            raise ValueError("grid leaves the model's domain")


def cell_log_volumes(model, r):
    """log of int phi^{n-1} over each dual cell [r_{i-1/2}, r_{i+1/2}].

    End cells are half cells.  Each integral is done with 16-point
    Gauss-Legendre after factoring out the largest exponent.
    """
    lo = np.concatenate([[r[0]], 0.5 * (r[:-1] + r[1:])])
    hi = np.concatenate([0.5 * (r[:-1] + r[1:]), [r[-1]]])
    half = 0.5 * (hi - lo)
    s = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_X
    logm = measure_exponent(model, s)
    top = np.max(logm, axis=1)
    vol = np.sum(_GL_W * np.exp(logm - top[:, None]), axis=1) * half
    return top + np.log(vol)


def laplacian_stencil(model, r):
    """Divergence-form coefficients (lower, diag, upper) and log cell volumes.

    (Lf)_i = [m_{i+1/2}(f_{i+1}-f_i) - m_{i-1/2}(f_i-f_{i-1})] / (h V_i)
    with face densities m = phi^{n-1} at midpoints and V_i the exact dual-cell
    volume.  The outer faces of the two end cells carry no flux (reflection,
    or the pole where phi = 0).  With these choices L r^2 = 2n holds exactly on
    flat space and diag(V) L is symmetric.
    """
    r = np.asarray(r, dtype=float)
    h = r[1] - r[0]
    logv = cell_log_volumes(model, r)
    logface = measure_exponent(model, 0.5 * (r[:-1] + r[1:]))
    up = np.zeros(r.size)
    lo = np.zeros(r.size)
    up[:-1] = np.exp(logface - logv[:-1]) / h
    lo[1:] = np.exp(logface - logv[1:]) / h
    return lo, -(lo + up), up, logv


def _as_nodes(grid):
    if isinstance(grid, RadialGrid):
        return grid.r, grid.boundary[0] == "pole"
    r = np.asarray(grid, dtype=float)
    if r.size < 4:
        raise GridTooCoarseError("radial_laplacian needs at least 4 nodes")
    return r, bool(r[0] == 0.0)


def radial_laplacian(model, f_values, grid):
    """Discrete phi^{1-n}(phi^{n-1} f')' on a uniform grid.

    Interior rows use the divergence-form stencil.  A pole end uses its
    zero-flux half cell (even reflection); any other end is filled by linear
    extrapolation from the two neighbouring rows.
    """
    r, pole = _as_nodes(grid)
    if r.size < 4:
        raise GridTooCoarseError("radial_laplacian needs at least 4 nodes")
    if isinstance(grid, RadialGrid):
        grid.check_model(model)
    f = np.asarray(f_values, dtype=float)
    lo, d, up, _ = laplacian_stencil(model, r)
    out = np.empty_like(f)
    out[1:-1] = lo[1:-1] * f[:-2] + d[1:-1] * f[1:-1] + up[1:-1] * f[2:]
    if pole:
        out[0] = d[0] * f[0] + up[0] * f[1]
    else:
        out[0] = 2 * out[1] - out[2]
    out[-1] = 2 * out[-2] - out[-3]
    return out


class VolumeReport(NamedTuple):
    r: float
    V: float
    nu: float
    nu_defined: bool


def ball_volume_model(model, r):
    """Volume of the ball of radius r about the pole (or the slab |s| <= r)."""
    if r <= 0:
        raise DomainError("radius must be positive")
    if model.flat_line:
        return 2.0 * r * model.cross_section_volume
    if model.kind == "euclidean":
        return model.cross_section_volume * r ** model.n / model.n
    dens = lambda s: math.exp(float(measure_exponent(model, np.array(s))))
    pieces = np.linspace(0.0, r, 9)
    total = math.fsum(integrate.quad(dens, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
                      for a, b in zip(pieces[:-1], pieces[1:]))
    if model.topology == "line":
        total *= 2.0
    return model.cross_section_volume * total


def volume_report(model, r):
    """Ball volume V and ratio nu = V / (omega_n r^n)."""
    V = ball_volume_model(model, r)
    if model.topology == "pole" or model.flat_line:
        return VolumeReport(float(r), V, V / (ball_volume(model.n) * r ** model.n), True)
    return VolumeReport(float(r), V, float("nan"), False)


def ricci_pointwise(model, r):
    """Smallest K >= 0 with Ric >= -K at radius r (no envelope).

    Radial direction: -(n-1) phi''/phi.  Tangential directions:
    -phi''/phi + (n-2)(1 - phi'^2)/phi^2 over a round sphere (pole models) and
    -phi''/phi - (n-2)(phi'/phi)^2 over a flat cross-section (line models).
    """
    n = model.n
    rr = np.asarray(r, dtype=float)
    if model.flat_line or model.kind == "euclidean":
        return np.zeros_like(rr)
    if model.kind == "hyperbolic":
        return np.full_like(rr, (n - 1) * model.K)
    _, d1, d2 = log_warp(model, rr)
    if model.topology == "line":
        tang = d2 + (n - 2) * d1 ** 2
    else:
        phi, dphi, _ = warp_eval(model, rr)
        with np.errstate(divide="ignore", invalid="ignore"):
            tang = d2 - (n - 2) * (1 - dphi ** 2) / phi ** 2
        tang = np.where(rr > 0, tang, d2)
    return np.maximum(0.0, np.maximum((n - 1) * d2, tang))


def ricci_lower_bound(model, r, samples=4001):
    """Nondecreasing envelope K(r) = max over |s| <= r of the pointwise bound."""
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    _check_domain(model, rr)
    out = np.empty_like(rr)
    for i, x in enumerate(np.abs(rr)):
        s = np.linspace(0.0, x, samples) if x > 0 else np.zeros(1)
        out[i] = np.max(ricci_pointwise(model, s))
    return float(out[0]) if np.ndim(r) == 0 else out
