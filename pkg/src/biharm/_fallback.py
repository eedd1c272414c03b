"""Numpy/scipy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and algorithms; loops that vectorize are vectorized, the rest
stay in Python.  Banded factorization goes through LAPACK's dgbtrf/dgbtrs,
which use the same storage layout as the compiled version.
"""

import numpy as np
from scipy.linalg import lapack
from scipy.special import gammaln

GL_X, GL_W = np.polynomial.legendre.leggauss(16)
SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def _is_half(nu):
    return (nu - 0.5) == np.floor(nu - 0.5)


def _series_scaled(nu, z):
    z = np.asarray(z, dtype=float)
    q = -0.25 * z * z
    term = np.full(z.shape, np.exp(-gammaln(nu + 1.0)))
    s = term.copy()
    kmax = int(0.5 * z.max(initial=0.0)) + 1
    for k in range(1, 601):
        term = term * q / (k * (nu + k))
        s = s + term
        if k > kmax and np.all(np.abs(term) <= 1e-17 * np.abs(s)):
            break
    return s


def _j_series(nu, z):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        pref = np.where(z > 0, np.exp(nu * np.log(np.where(z > 0, 0.5 * z, 1.0))), 0.0)
    out = pref * _series_scaled(nu, z)
    if nu == 0.0:
        out = np.where(z == 0, 1.0, out)
    return out


def _j_half(nu, z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = (z < nu) & (nu > 1.0)
    if small.any():
        out[small] = _j_series(nu, z[small])
    big = ~small
    zb = z[big]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.sqrt(2.0 / (np.pi * zb))
        s0 = c * np.cos(zb)
        if nu == -0.5:
            out[big] = s0
            return out
        s1 = c * np.sin(zb)
        order = 0.5
        while order < nu:
            s0, s1 = s1, (2.0 * order / zb) * s1 - s0
            order += 1.0
    s1 = np.where(zb == 0, 0.0, s1)
    out[big] = s1
    return out


def _j_trapezoid(m, z):
    out = np.empty_like(z)
    for i, zi in enumerate(z):
        M = int(zi + m + 20.0 + 10.0 * zi ** (1.0 / 3.0))
        M += M % 2
        tau = 2.0 * np.pi * np.arange(M) / M
        out[i] = np.cos(m * tau - zi * np.sin(tau)).sum() / M
    return out


def _j_schlafli(nu, z):
    out = np.empty_like(z)
    for i, zi in enumerate(z):
        npan = int((zi + nu) / 2.0) + 4
        edges = np.linspace(0.0, np.pi, npan + 1)
        hw = 0.5 * np.diff(edges)
        tau = (0.5 * (edges[:-1] + edges[1:]))[:, None] + hw[:, None] * GL_X
        s1 = np.sum(GL_W * hw[:, None] * np.cos(nu * tau - zi * np.sin(tau)))
        T = np.arcsinh(60.0 / zi) + 1.0
        edges = np.linspace(0.0, T, 17)
        hw = 0.5 * np.diff(edges)
        tau = (0.5 * (edges[:-1] + edges[1:]))[:, None] + hw[:, None] * GL_X
        s2 = np.sum(GL_W * hw[:, None] * np.exp(-zi * np.sinh(tau) - nu * tau))
        out[i] = s1 / np.pi - np.sin(nu * np.pi) / np.pi * s2
    return out


def _j_asymptotic(nu, z):
    mu = 4.0 * nu * nu
    P = np.ones_like(z)
    Q = np.zeros_like(z)
    term = np.ones_like(z)
    prev = np.full(z.shape, np.inf)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, 201):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        live &= np.abs(term) <= prev
        prev = np.abs(term)
        t = np.where(live, term, 0.0)
        if k % 4 == 1:
            Q += t
        elif k % 4 == 2:
            P -= t
        elif k % 4 == 3:
            Q -= t
        else:
            P += t
        live &= np.abs(term) >= 1e-17
        if not live.any():
            break
    chi = z - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * z)) * (P * np.cos(chi) - Q * np.sin(chi))


def bessel_j(nu, z):
    z = np.ascontiguousarray(z, dtype=float)
    if _is_half(nu):
        return _j_half(nu, z)
    out = np.empty_like(z)
    ser = z <= 8.0
    asy = z > 25.0 + 2.0 * nu * nu
    mid = ~(ser | asy)
    if ser.any():
        out[ser] = _j_series(nu, z[ser])
    if asy.any():
        out[asy] = _j_asymptotic(nu, z[asy])
    if mid.any():
        if nu == np.floor(nu):
            out[mid] = _j_trapezoid(int(nu), z[mid])
        else:
            out[mid] = _j_schlafli(nu, z[mid])
    return out


def lam_nu(nu, z):
    z = np.ascontiguousarray(z, dtype=float)
    if nu == -0.5:
        return SQRT_2_OVER_PI * np.cos(z)
    out = np.empty_like(z)
    small = z <= 8.0
    if small.any():
        out[small] = np.exp(-nu * np.log(2.0)) * _series_scaled(nu, z[small])
    big = ~small
    if big.any():
        out[big] = np.exp(-nu * np.log(z[big])) * bessel_j(nu, z[big])
    return out


def _gl_panels(n, nu, eta, a, b):
    hw = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + hw[:, None] * GL_X
    vals = np.exp(-x ** 4) * x ** (n - 1) * lam_nu(nu, (eta * x).ravel()).reshape(x.shape)
    return (vals @ GL_W) * hw


def profile_direct(n, eta, tol=1e-10, smax=8.0):
    eta = np.ascontiguousarray(eta, dtype=float)
    nu = 0.5 * (n - 2)
    out = np.empty(eta.shape[0])
    stalls = 0
    s_cut = min(smax, 5.25)
    for i, e in enumerate(eta):
        width = 0.25 if e <= 0 else min(0.25, np.pi / (4.0 * e))
        edges = np.arange(0.0, s_cut, width)
        a = edges
        b = np.minimum(edges + width, smax)
        whole = _gl_panels(n, nu, e, a, b)
        acc = 0.0
        floor_ = 1e-18
        for depth in range(31):
            m = 0.5 * (a + b)
            left = _gl_panels(n, nu, e, a, m)
            right = _gl_panels(n, nu, e, m, b)
            both = left + right
            ok = np.abs(both - whole) <= tol * (np.abs(both) + floor_)
            if depth == 30:
                ok[:] = True
                stalls += int(np.count_nonzero(np.abs(both - whole) > tol * (np.abs(both) + floor_)))
            acc += both[ok].sum()
            bad = ~ok
            if not bad.any():
                break
            a = np.concatenate([a[bad], m[bad]])
            b = np.concatenate([m[bad], b[bad]])
            whole = np.concatenate([left[bad], right[bad]])
        out[i] = acc
    return out, stalls


def _phase_rate(u, y, eta):
    return np.abs(eta - 12.0 * u * u * y + 4.0 * y ** 3) + np.abs(-4.0 * u ** 3 + 12.0 * u * y * y)


def _line_nodes(eta):
    y = 0.5 * (eta / 4.0) ** (1.0 / 3.0)
    U = np.sqrt(3.0 * y * y + np.sqrt(60.0)) + 1.0
    a = 0.0
    lo = []
    while a < U:
        rate = max(_phase_rate(a, y, eta), _phase_rate(a + 0.25, y, eta))
        w = min(0.25, 2.0 / (rate + 1e-300))
        lo.append((a, w))
        a += w
    lo = np.array(lo)
    hw = 0.5 * lo[:, 1]
    u = (lo[:, 0] + hw)[:, None] + hw[:, None] * GL_X
    wts = GL_W * hw[:, None]
    return y, u.ravel(), wts.ravel()


def contour_odd(eta, jmax):
    y, u, w = _line_nodes(eta)
    s = u + 1j * y
    g = np.exp(-s ** 4 + 1j * eta * s) * w
    out = np.empty(jmax + 1)
    for j in range(jmax + 1):
        out[j] = np.sum(g.real)
        g = g * (1j * s)
    return out * SQRT_2_OVER_PI


def _hankel1(m, z):
    mu = 4.0 * m * m
    term = np.ones_like(z)
    total = np.ones_like(z)
    prev = np.full(z.shape, np.inf)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, 81):
        term = term * 1j * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        mag = np.abs(term)
        live &= mag <= prev
        prev = mag
        total = total + np.where(live, term, 0.0)
        live &= mag >= 1e-17 * np.abs(total)
        if not live.any():
            break
    return np.sqrt(2.0 / (np.pi * z)) * np.exp(1j * (z - (0.5 * m + 0.25) * np.pi)) * total


def contour_even(m, eta):
    y, u, w = _line_nodes(eta)
    s = u + 1j * y
    vals = np.exp(-s ** 4) * s ** (m + 1) * _hankel1(m, eta * s)
    return float(np.sum(w * vals.real)) * eta ** (-m)


def gbtrf(ab, kl, ku):
    lu, ipiv, info = lapack.dgbtrf(ab, kl, ku, overwrite_ab=1)
    ab[...] = lu
    return ipiv.astype(np.intc), int(info)


def gbtrs(ab, kl, ku, ipiv, b):
    x, info = lapack.dgbtrs(ab, kl, ku, b, ipiv)
    b[...] = x


def band_matvec(band, x):
    n = x.shape[0]
    y = band[:, 2] * x
    y[1:] += band[1:, 1] * x[:-1]
    y[2:] += band[2:, 0] * x[:-2]
    y[:-1] += band[:-1, 3] * x[1:]
    y[:-2] += band[:-2, 4] * x[2:]
    return y


def theta_march(lu, ipiv, band, u0, weights, fixed, dt, theta, nsteps, record):
    u = np.array(u0, dtype=float, copy=True)
    fixed = np.asarray(fixed, dtype=bool)
    c = (1.0 - theta) * dt
    snaps = np.empty((len(record), u.shape[0]))
    mass = np.empty(nsteps + 1)
    l2 = np.empty(nsteps + 1)
    linf = np.empty(nsteps + 1)
    ri = 0
    for k in range(nsteps + 1):
        if k > 0:
            if c != 0.0:
                u = u - c * band_matvec(band, u)
            u[fixed] = 0.0
            u, info = lapack.dgbtrs(lu, 2, 2, u, ipiv)
        mass[k] = np.dot(weights, u)
        l2[k] = np.sqrt(np.dot(weights, u * u))
        linf[k] = np.max(np.abs(u))
        while ri < len(record) and record[ri] == k:
            snaps[ri] = u
            ri += 1
    return snaps, mass, l2, linf


def nested_levels(r, n, eps):
    r = np.asarray(r, dtype=float)
    N = r.shape[0]
    c = n - 1.0
    p = 2.0 + eps
    h = np.diff(r)
    L = r ** p
    a = c * p * r ** (p - 1.0)
    t = 0.5 * (GL_X + 1.0)
    tau = r[:-1, None] + h[:, None] * t
    ker = np.exp(c * (tau ** p - L[1:, None]))
    E = np.exp(c * (L[:-1] - L[1:]))
    src1 = 0.5 * h * (ker @ GL_W)
    w1 = np.zeros(N)
    for k in range(N - 1):
        w1[k + 1] = E[k] * w1[k] + src1[k]
    d = 1.0 - a * w1
    i2 = np.concatenate([[0.0], np.cumsum(0.5 * h * (w1[:-1] + w1[1:]) + h * h / 12.0 * (d[:-1] - d[1:]))])
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    i2q = (h00 * i2[:-1, None] + h10 * (h * w1[:-1])[:, None]
           + h01 * i2[1:, None] + h11 * (h * w1[1:])[:, None])
    src3 = 0.5 * h * ((ker * i2q) @ GL_W)
    w3 = np.zeros(N)
    for k in range(N - 1):
        w3[k + 1] = E[k] * w3[k] + src3[k]
    d = i2 - a * w3
    F = np.concatenate([[0.0], np.cumsum(0.5 * h * (w3[:-1] + w3[1:]) + h * h / 12.0 * (d[:-1] - d[1:]))])
    return w1, i2, w3, F
