"""Distance-like functions and cut-offs on radial model manifolds.

A positive solution of Delta h = lambda h on [1/2, R+1] with h = 1 inside and
h = 0 outside decays like exp(-sqrt(lambda) r), so -log h^2 grows linearly and
serves as a smooth stand-in for the distance.  On radial models everything
reduces to ODEs in r; derivatives of f follow from g = h'/h via

    Delta log h = lambda - g^2.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import solve_banded

from .warped_geometry import laplacian_stencil, log_warp, ricci_lower_bound, volume_report


class RefinementStallError(RuntimeError):
    """Grid refinement did not reach the requested accuracy."""


class NonPositiveError(RuntimeError):
    """h is not strictly positive inside the interval."""


def eta_profile(x, deriv=0):
    """C^2 step: 1 on x <= 1, 0 on x >= 2, quintic smoothstep between.

    Its slope lies in [-15/8, 0] and its second derivative in [-10/sqrt(3),
    10/sqrt(3)], inside the required bounds -2 < eta' <= 0 and |eta''| <= 10.
    """
    s = np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, 1.0)
    if deriv == 0:
        return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)
    if deriv == 1:
        return -30 * s * s * (1 - s) ** 2
    if deriv == 2:
        return -60 * s * (1 - s) * (1 - 2 * s)
    raise ValueError("deriv must be 0, 1 or 2")


def default_A(K, C_hat=1.0):
    """A = (4/3)(3 C sqrt(K+1) + C^2 + 1)."""
    return 4.0 / 3.0 * (3 * C_hat * math.sqrt(K + 1.0) + C_hat ** 2 + 1.0)


@dataclass(frozen=True)
class ScaffoldConfig:
    model: object
    R: float
    K: float = 0.0
    A: float = None
    k: float = 4.0
    rho: float = 1.0
    C_hat: float = 1.0
    spacing: float = 0.01

    def __post_init__(self):
        if self.A is None:
            object.__setattr__(self, "A", default_A(self.K, self.C_hat))
        if self.R <= 3:
            raise ValueError("R must exceed 3")
        if self.k < 4:
            raise ValueError("k must be at least 4")
        if self.rho <= 0 or self.K < 0:
            raise ValueError("need rho > 0 and K >= 0")

    @property
    def lam(self):
        return self.A ** 2 / 4.0 + 1.0


def _dirichlet_once(model, lam, inner, outer, N):
    r = np.linspace(inner, outer, N)
    lo, d, up, _ = laplacian_stencil(model, r)
    ab = np.zeros((3, N - 2))
    ab[0, 1:] = up[1:-2]
    ab[1, :] = d[1:-1] - lam
    ab[2, :-1] = lo[2:-1]
    rhs = np.zeros(N - 2)
    rhs[0] = -lo[1] * 1.0
    h = np.empty(N)
    h[0], h[-1] = 1.0, 0.0
    h[1:-1] = solve_banded((1, 1), ab, rhs)
    return r, h


def solve_radial_dirichlet(model, lam, inner=0.5, outer=None, spacing=0.01, tol=1e-8,
                           rel_tol=1e-6, max_levels=6):
    """h'' + (n-1)(phi'/phi) h' = lam h, h(inner) = 1, h(outer) = 0.

    Solved with the divergence-form Laplacian at spacings s and s/2 and
    combined by Richardson extrapolation; the spacing is halved until the
    extrapolated values change by at most ``tol`` in max norm and by at most
    ``rel_tol`` relative to themselves between levels (h falls by many orders
    of magnitude and log h is what later steps use).  Returns (r, h) on the
    coarse nodes of the last accepted level.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if outer is None or not outer > inner:
        raise ValueError("need inner < outer")
    N = int(round((outer - inner) / spacing)) + 1
    prev = None
    for _ in range(max_levels):
        rc, hc = _dirichlet_once(model, lam, inner, outer, N)
        _, hf = _dirichlet_once(model, lam, inner, outer, 2 * N - 1)
        ext = (4.0 * hf[::2] - hc) / 3.0
        if prev is not None:
            pr, ph = prev
            sub = ext[::2]
            inside = np.abs(ph) > 1e-280
            inside[[0, -1]] = False
            diff = np.abs(sub[inside] - ph[inside])
            err = np.max(diff)
            rel = np.max(diff / np.abs(ph[inside]))
            if err <= tol and rel <= rel_tol:
                return rc, ext
        prev = (rc, ext)
        N = 2 * N - 1
    raise RefinementStallError(f"change {err:.3g} (relative {rel:.3g}) above tolerance")


@dataclass
class Scaffold:
    config: ScaffoldConfig
    r: np.ndarray
    h: np.ndarray
    f: np.ndarray
    df: np.ndarray
    lapf: np.ndarray
    phi: np.ndarray
    log_Cbar: float
    measured: dict = field(default_factory=dict)


def build_distance_like(config, r, h):
    """f = (-(1 - eta) log h^2 + log Cbar) / sqrt(1 + K) with f', Delta f.

    log Cbar is the smallest value making f >= r on [2, R], namely
    max over [2, R] of log h^2 + sqrt(1 + K) r.  Returns (r, f, f', Delta f)
    restricted to [r_inner, R].
    """
    if np.any(h[:-1] <= 0):
        raise NonPositiveError("h must be positive before the outer end")
    model, K, lam = config.model, config.K, config.lam
    keep = r <= config.R * (1 + 1e-12)
    rr, hh = r[keep], h[keep]
    L = 2.0 * np.log(hh)
    # g = h'/h from log h; fourth-order differences inside, one-sided at ends.
    ds = rr[1] - rr[0]
    logh = 0.5 * L
    g = np.gradient(logh, ds, edge_order=2)
    g[2:-2] = (logh[:-4] - 8 * logh[1:-3] + 8 * logh[3:-1] - logh[4:]) / (12 * ds)
    s = math.sqrt(1.0 + K)
    band = (rr >= 2.0) & (rr <= config.R)
    log_Cbar = float(np.max(L[band] + s * rr[band]))
    e0, e1, e2 = eta_profile(rr), eta_profile(rr, 1), eta_profile(rr, 2)
    _, dlog, _ = log_warp(model, rr)
    a = (model.n - 1) * dlog
    lap_eta = e2 + a * e1
    f = ((e0 - 1.0) * L + log_Cbar) / s
    # rounding can leave f a few ulps below r at the maximizer; raise log Cbar
    # until f >= r holds in floating point as well
    while np.any(f[band] < rr[band]):
        log_Cbar = np.nextafter(log_Cbar, np.inf) + s * float(np.max(rr[band] - f[band]))
        f = ((e0 - 1.0) * L + log_Cbar) / s
    log_Cbar = float(log_Cbar)
    df = ((e0 - 1.0) * 2 * g + e1 * L) / s
    lapf = ((e0 - 1.0) * 2 * (lam - g * g) + 4 * e1 * g + lap_eta * L) / s
    return rr, f, df, lapf, log_Cbar


def build_cutoff(config, f, R_cut=None, rho=None):
    """phi = eta^k(1 + (f - R)/rho): 1 on {f <= R}, 0 on {f >= R + rho}."""
    R = config.R if R_cut is None else R_cut
    rho = config.rho if rho is None else rho
    return eta_profile(1.0 + (np.asarray(f) - R) / rho) ** config.k


def build_scaffold(config):
    """Dirichlet solve, distance-like function and a cut-off at level R/2.

    The cut-off radius defaults to half the construction radius so that the
    transition {R/2 <= f <= R/2 + rho} stays inside the sampled range.
    """
    r, h = solve_radial_dirichlet(config.model, config.lam, 0.5, config.R + 1.0,
                                  spacing=config.spacing)
    rr, f, df, lapf, logC = build_distance_like(config, r, h)
    phi = build_cutoff(config, f, R_cut=0.5 * config.R)
    return Scaffold(config, rr, h[: rr.size], f, df, lapf, phi, logC)


def cutoff_bounds(scaffold, R_cut, rho, k=None):
    """Measured constants in |grad phi| <= C (k/rho) phi^{1-1/k} and
    |Delta phi| <= C k^2 sqrt(1 + K(R+rho)) / rho * phi^{1-2/k}.

    Derivatives of phi come from finite differences of its samples.  Each
    measured constant is compared with the value the chain rule allows,
    given the eta bounds |eta'| < 2, |eta''| <= 10 and the measured sup |f'|,
    sup |Delta f| over the transition region.
    """
    cfg = scaffold.config
    k = cfg.k if k is None else k
    r, f = scaffold.r, scaffold.f
    if f[-1] < R_cut + rho:
        raise ValueError("cut-off transition leaves the sampled range")
    phi = eta_profile(1.0 + (f - R_cut) / rho) ** k
    ds = r[1] - r[0]
    dphi = np.gradient(phi, ds, edge_order=2)
    d2 = np.gradient(dphi, ds, edge_order=2)
    _, dlog, _ = log_warp(cfg.model, r)
    lap = d2 + (cfg.model.n - 1) * dlog * dphi
    Kr = ricci_lower_bound(cfg.model, R_cut + rho)
    live = (phi > 1e-8) & (r > 2.0 + 2 * ds) & (r < r[-1] - 2 * ds)
    trans = live & (phi < 1.0)
    if not trans.any():
        raise ValueError("no grid nodes in the cut-off transition")
    gradC = np.max(np.abs(dphi[live]) / ((k / rho) * phi[live] ** (1 - 1 / k)))
    lapC = np.max(np.abs(lap[live]) * rho / (k * k * math.sqrt(1 + Kr) * phi[live] ** (1 - 2 / k)))
    fmax = np.max(np.abs(scaffold.df[trans]))
    lmax = np.max(np.abs(scaffold.lapf[trans]))
    grad_allowed = 2.0 * fmax
    lap_allowed = (2.0 * lmax / k + (4.0 + 10.0 / k) * fmax ** 2 / rho) / math.sqrt(1 + Kr)
    return {
        "grad_C": float(gradC),
        "grad_allowed": float(grad_allowed),
        "lap_C": float(lapC),
        "lap_allowed": float(lap_allowed),
        "pass": bool(gradC <= 1.02 * grad_allowed and lapC <= 1.02 * lap_allowed),
    }


def verify_scaffold(scaffold, annulus=None):
    """Measured constants on an annulus (default [2, R]).

    Lambda_low = min f/r (must be >= 1), Lambda_up = max f/r,
    grad_bound = max |f'|, lap_bound = max |Delta f| and lap_const =
    lap_bound / sqrt(1 + K).  Lambda_hat is the single constant for which
    r <= f <= Lambda_hat r, |f'| <= Lambda_hat and |Delta f| <= Lambda_hat
    sqrt(1 + K) all hold.  On models with vanishing Ricci envelope the
    almost-linear decay constant max r |Delta f| / (1 - ln nu(r)) is reported.
    """
    cfg = scaffold.config
    lo, hi = (2.0, cfg.R) if annulus is None else annulus
    m = (scaffold.r >= lo - 1e-12) & (scaffold.r <= hi + 1e-12)
    r, f = scaffold.r[m], scaffold.f[m]
    ratio = f / r
    lap = np.abs(scaffold.lapf[m])
    out = {
        "annulus": (float(lo), float(hi)),
        "Lambda_low": float(ratio.min()),
        "Lambda_up": float(ratio.max()),
        "grad_bound": float(np.max(np.abs(scaffold.df[m]))),
        "lap_bound": float(lap.max()),
        "lap_const": float(lap.max() / math.sqrt(1.0 + cfg.K)),
        "A": cfg.A,
        "lambda": cfg.lam,
        "log_Cbar": scaffold.log_Cbar,
    }
    out["Lambda_hat"] = max(out["Lambda_up"], out["grad_bound"], out["lap_const"])
    if cfg.model.topology == "pole" and ricci_lower_bound(cfg.model, hi) == 0.0:
        sub = slice(None, None, max(1, r.size // 400))
        if cfg.model.kind == "euclidean":
            nu = np.ones_like(r[sub])
        else:
            nu = np.array([volume_report(cfg.model, x).nu for x in r[sub]])
        out["decay_const"] = float(np.max(r[sub] * lap[sub] / (1.0 - np.log(nu))))
    out["lower_ok"] = bool(out["Lambda_low"] >= 1.0 - 1e-12)
    out["pass"] = bool(out["lower_ok"] and np.isfinite(out["Lambda_hat"]))
    return out


def glue(model, K, R0, levels, Lambda_hat, **cfg):
    """Radial form of the multi-annulus gluing with radii R_i = (2 Lambda)^i R0.

    Builds f_i on [0, R_i] and blends consecutive ones across [R_i/2, R_i]
    with the eta profile.  Returns (r, f, per-annulus reports).
    """
    radii = [(2.0 * Lambda_hat) ** i * R0 for i in range(levels)]
    pieces = []
    for Ri in radii:
        sc = build_scaffold(ScaffoldConfig(model, Ri, K, **cfg))
        pieces.append(sc)
    r = pieces[-1].r
    f = np.interp(r, pieces[-1].r, pieces[-1].f)
    for i in range(levels - 2, -1, -1):
        Ri = radii[i]
        wt = eta_profile(1.0 + (r - Ri / 2) / (Ri / 2))
        fi = np.interp(r, pieces[i].r, pieces[i].f, right=0.0)
        f = wt * fi + (1.0 - wt) * f
    reports = []
    for i, Ri in enumerate(radii):
        lo = 2.0 if i == 0 else radii[i - 1]
        m = (r >= lo) & (r <= Ri)
        ratio = f[m] / r[m]
        reports.append({"annulus": (lo, Ri), "Lambda_low": float(ratio.min()),
                        "Lambda_up": float(ratio.max())})
    return r, f, reports
