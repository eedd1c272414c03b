# cython: language_level=3
"""Compiled hot loops.

Every function here has a numpy twin in ``_fallback.py`` with the same
signature and the same numerical algorithm; ``kernels.py`` picks one at
import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport (sin, cos, exp, log, sqrt, fabs, lgamma, floor,
                        asinh, sinh, M_PI)

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex csqrt(double complex)
    double creal(double complex)
    double cimag(double complex)
    double cabs(double complex)

cdef double[16] GL_X
cdef double[16] GL_W

_x, _w = np.polynomial.legendre.leggauss(16)
for _i in range(16):
    GL_X[_i] = _x[_i]
    GL_W[_i] = _w[_i]

cdef double SQRT_2_OVER_PI = sqrt(2.0 / M_PI)


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, real order, real argument
# ---------------------------------------------------------------------------

cdef inline bint _is_int(double nu) nogil:
    return nu == floor(nu)


cdef inline bint _is_half(double nu) nogil:
    return (nu - 0.5) == floor(nu - 0.5)


cdef double _series_scaled(double nu, double z) nogil:
    """sum_k (-z^2/4)^k / (k! Gamma(nu+k+1)); J_nu(z) = (z/2)^nu times this."""
    cdef double q = -0.25 * z * z
    cdef double term = exp(-lgamma(nu + 1.0))
    cdef double s = term
    cdef int k = 0
    while k < 600:
        k += 1
        term *= q / (k * (nu + k))
        s += term
        if fabs(term) <= 1e-17 * fabs(s) and k > 0.5 * z:
            break
    return s


cdef double _j_series(double nu, double z) nogil:
    if z == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    return exp(nu * log(0.5 * z)) * _series_scaled(nu, z)


cdef double _j_half(double nu, double z) nogil:
    """Half-integer order via the closed spherical forms and upward recurrence."""
    cdef double c, s0, s1, tmp, order
    if z == 0.0:
        return 0.0 if nu > 0 else 1.0 / 0.0
    if nu > 1.0 and z < nu:
        return _j_series(nu, z)
    c = sqrt(2.0 / (M_PI * z))
    s0 = c * cos(z)         # J_{-1/2}
    if nu == -0.5:
        return s0
    s1 = c * sin(z)         # J_{1/2}
    order = 0.5
    while order < nu:
        tmp = (2.0 * order / z) * s1 - s0
        s0 = s1
        s1 = tmp
        order += 1.0
    return s1


cdef double _j_trapezoid(int m, double z) nogil:
    """Integer order: periodic trapezoid rule on (1/2pi) int cos(m tau - z sin tau)."""
    cdef int M = <int>(z + m + 20.0 + 10.0 * z ** (1.0 / 3.0))
    cdef int j
    cdef double s = 0.0, tau
    M += M % 2
    for j in range(M):
        tau = 2.0 * M_PI * j / M
        s += cos(m * tau - z * sin(tau))
    return s / M


cdef double _j_schlafli(double nu, double z) nogil:
    """Non-integer order: Schlafli integral with composite Gauss-Legendre."""
    cdef int npan = <int>((z + nu) / 2.0) + 4
    cdef double a, b, hw, mid, s1 = 0.0, s2 = 0.0, tau, T
    cdef int p, q
    for p in range(npan):
        a = M_PI * p / npan
        b = M_PI * (p + 1) / npan
        hw = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for q in range(16):
            tau = mid + hw * GL_X[q]
            s1 += GL_W[q] * hw * cos(nu * tau - z * sin(tau))
    T = asinh(60.0 / z) + 1.0
    for p in range(16):
        a = T * p / 16.0
        b = T * (p + 1) / 16.0
        hw = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for q in range(16):
            tau = mid + hw * GL_X[q]
            s2 += GL_W[q] * hw * exp(-z * sinh(tau) - nu * tau)
    return s1 / M_PI - sin(nu * M_PI) / M_PI * s2


cdef double _j_asymptotic(double nu, double z) nogil:
    """Hankel expansion J = sqrt(2/(pi z)) (P cos chi - Q sin chi)."""
    cdef double mu = 4.0 * nu * nu
    cdef double P = 1.0, Q = 0.0, term = 1.0, prev = 1e300
    cdef int k = 0
    cdef double chi = z - (0.5 * nu + 0.25) * M_PI
    while k < 200:
        k += 1
        term *= (mu - (2 * k - 1) * (2 * k - 1)) / (8.0 * k * z)
        if fabs(term) > prev:
            break
        prev = fabs(term)
        if k % 4 == 1:
            Q += term
        elif k % 4 == 2:
            P -= term
        elif k % 4 == 3:
            Q -= term
        else:
            P += term
        if fabs(term) < 1e-17:
            break
    return sqrt(2.0 / (M_PI * z)) * (P * cos(chi) - Q * sin(chi))


cdef double _bessel_j(double nu, double z) nogil:
    if _is_half(nu):
        return _j_half(nu, z)
    if z <= 8.0:
        return _j_series(nu, z)
    if z > 25.0 + 2.0 * nu * nu:
        return _j_asymptotic(nu, z)
    if _is_int(nu):
        return _j_trapezoid(<int>nu, z)
    return _j_schlafli(nu, z)


cdef double _lam(double nu, double z) nogil:
    """z^{-nu} J_nu(z), the entire even function used in the profile integrand."""
    if nu == -0.5:
        return SQRT_2_OVER_PI * cos(z)
    if z <= 8.0:
        return exp(-nu * log(2.0)) * _series_scaled(nu, z)
    return exp(-nu * log(z)) * _bessel_j(nu, z)


def bessel_j(double nu, double[::1] z):
    cdef Py_ssize_t i, n = z.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _bessel_j(nu, z[i])
    return out


def lam_nu(double nu, double[::1] z):
    cdef Py_ssize_t i, n = z.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _lam(nu, z[i])
    return out


# ---------------------------------------------------------------------------
# Similarity profile by direct panel quadrature
# ---------------------------------------------------------------------------

cdef double _gl_panel(int n, double nu, double eta, double a, double b) nogil:
    cdef double hw = 0.5 * (b - a), mid = 0.5 * (a + b), s = 0.0, x
    cdef int q
    for q in range(16):
        x = mid + hw * GL_X[q]
        s += GL_W[q] * exp(-x * x * x * x) * x ** (n - 1) * _lam(nu, eta * x)
    return s * hw


cdef int _adapt(int n, double nu, double eta, double a, double b, double whole,
                double tol, double floor_, int depth, double *acc) nogil:
    cdef double m = 0.5 * (a + b)
    cdef double left = _gl_panel(n, nu, eta, a, m)
    cdef double right = _gl_panel(n, nu, eta, m, b)
    cdef int bad
    if fabs(left + right - whole) <= tol * (fabs(left + right) + floor_):
        acc[0] += left + right
        return 0
    if depth >= 30:
        acc[0] += left + right
        return 1
    bad = _adapt(n, nu, eta, a, m, left, tol, floor_, depth + 1, acc)
    bad += _adapt(n, nu, eta, m, b, right, tol, floor_, depth + 1, acc)
    return bad


def profile_direct(int n, double[::1] eta, double tol=1e-10, double smax=8.0):
    """F_n(eta) for each eta; returns (values, number of stalled panels)."""
    cdef Py_ssize_t i, ne = eta.shape[0]
    cdef double nu = 0.5 * (n - 2)
    cdef double width, a, b, e, acc, whole, floor_
    cdef double s_cut = 5.25   # exp(-s^4) < 1e-330 beyond: below double range
    cdef int stalls = 0
    out = np.empty(ne)
    cdef double[::1] o = out
    with nogil:
        for i in range(ne):
            e = eta[i]
            width = 0.25
            if e > 0 and M_PI / (4.0 * e) < width:
                width = M_PI / (4.0 * e)
            acc = 0.0
            floor_ = 1e-18
            a = 0.0
            while a < smax and a < s_cut:
                b = a + width
                if b > smax:
                    b = smax
                whole = _gl_panel(n, nu, e, a, b)
                stalls += _adapt(n, nu, e, a, b, whole, tol, floor_, 0, &acc)
                a = b
            o[i] = acc
    return out, stalls


# ---------------------------------------------------------------------------
# Saddle-line contour integrals for large eta
# ---------------------------------------------------------------------------

cdef inline double _phase_rate(double u, double y, double eta) nogil:
    # |d/du| of the exponent of exp(-s^4 + i eta s) along s = u + i y
    return fabs(eta - 12.0 * u * u * y + 4.0 * y * y * y) + \
        fabs(-4.0 * u * u * u + 12.0 * u * y * y)


def contour_odd(double eta, int jmax):
    """sqrt(2/pi) Re int_0^inf (i s)^j exp(-s^4 + i eta s) du, s = u + i y, j <= jmax.

    These are the derivatives F_1^{(j)}(eta) computed on the horizontal line
    through the two saddles, where the integrand does not oscillate wildly.
    """
    cdef double y = 0.5 * (eta / 4.0) ** (1.0 / 3.0)
    cdef double U = sqrt(3.0 * y * y + sqrt(60.0 + 0.0)) + 1.0
    cdef double a = 0.0, b, hw, mid, u, rate, w
    cdef int q, j
    cdef double complex s, g, ips
    acc = np.zeros(jmax + 1)
    cdef double[::1] o = acc
    while a < U:
        rate = _phase_rate(a, y, eta)
        w = _phase_rate(a + 0.25, y, eta)
        if w > rate:
            rate = w
        w = 2.0 / (rate + 1e-300)
        if w > 0.25:
            w = 0.25
        b = a + w
        hw = 0.5 * w
        mid = a + hw
        for q in range(16):
            u = mid + hw * GL_X[q]
            s = u + 1j * y
            g = cexp(-s * s * s * s + 1j * eta * s) * GL_W[q] * hw
            ips = 1j * s
            for j in range(jmax + 1):
                o[j] += creal(g)
                g = g * ips
        a = b
    for j in range(jmax + 1):
        o[j] *= SQRT_2_OVER_PI
    return acc


cdef double complex _hankel1(int m, double complex z) nogil:
    """H^(1)_m(z) by its large-|z| expansion (|z| >= 12, Im z >= 0)."""
    cdef double mu = 4.0 * m * m
    cdef double complex term = 1.0, total = 1.0
    cdef double prev = 1e300, mag
    cdef int k = 0
    while k < 80:
        k += 1
        term = term * 1j * (mu - (2 * k - 1) * (2 * k - 1)) / (8.0 * k * z)
        mag = cabs(term)
        if mag > prev:
            break
        prev = mag
        total = total + term
        if mag < 1e-17 * cabs(total):
            break
    return csqrt(2.0 / (M_PI * z)) * cexp(1j * (z - (0.5 * m + 0.25) * M_PI)) * total


def contour_even(int m, double eta):
    """eta^{-m} Re int_0^inf exp(-s^4) s^{m+1} H^(1)_m(eta s) du, s = u + i y."""
    cdef double y = 0.5 * (eta / 4.0) ** (1.0 / 3.0)
    cdef double U = sqrt(3.0 * y * y + sqrt(60.0)) + 1.0
    cdef double a = 0.0, b, hw, mid, u, rate, w, total = 0.0
    cdef int q
    cdef double complex s, sp
    while a < U:
        rate = _phase_rate(a, y, eta)
        w = _phase_rate(a + 0.25, y, eta)
        if w > rate:
            rate = w
        w = 2.0 / (rate + 1e-300)
        if w > 0.25:
            w = 0.25
        b = a + w
        hw = 0.5 * w
        mid = a + hw
        for q in range(16):
            u = mid + hw * GL_X[q]
            s = u + 1j * y
            sp = s
            for _ in range(m):
                sp = sp * s
            total += GL_W[q] * hw * creal(cexp(-s * s * s * s) * sp * _hankel1(m, eta * s))
        a = b
    return total * eta ** (-m)


# ---------------------------------------------------------------------------
# Banded LU with partial pivoting (LAPACK band storage, unblocked dgbtf2)
# ---------------------------------------------------------------------------

def gbtrf(double[::1, :] ab, int kl, int ku):
    """Factor in place; ab has 2*kl+ku+1 rows. Returns (ipiv, info)."""
    cdef int n = ab.shape[1]
    cdef int kv = ku + kl
    cdef int i, j, jp, ju, km, c, info = 0
    cdef double piv, tmp, x, best
    ipiv_arr = np.zeros(n, dtype=np.intc)
    cdef int[::1] ipiv = ipiv_arr
    with nogil:
        for j in range(ku + 1, min(kv, n)):
            for i in range(kv - j, kl):
                ab[i, j] = 0.0
        ju = 0
        for j in range(n):
            if j + kv < n:
                for i in range(kl):
                    ab[i, j + kv] = 0.0
            km = min(kl, n - 1 - j)
            jp = 0
            best = fabs(ab[kv, j])
            for i in range(1, km + 1):
                if fabs(ab[kv + i, j]) > best:
                    best = fabs(ab[kv + i, j])
                    jp = i
            ipiv[j] = jp + j
            if ab[kv + jp, j] != 0.0:
                ju = max(ju, min(j + ku + jp, n - 1))
                if jp != 0:
                    for c in range(ju - j + 1):
                        tmp = ab[kv + jp - c, j + c]
                        ab[kv + jp - c, j + c] = ab[kv - c, j + c]
                        ab[kv - c, j + c] = tmp
                if km > 0:
                    piv = 1.0 / ab[kv, j]
                    for i in range(1, km + 1):
                        ab[kv + i, j] *= piv
                    for c in range(1, ju - j + 1):
                        x = ab[kv - c, j + c]
                        if x != 0.0:
                            for i in range(1, km + 1):
                                ab[kv + i - c, j + c] -= ab[kv + i, j] * x
            elif info == 0:
                info = j + 1
    return ipiv_arr, info


cdef void _gbtrs(double[::1, :] ab, int kl, int ku, int[::1] ipiv,
                 double[::1] b) nogil:
    cdef int n = ab.shape[1]
    cdef int kv = ku + kl
    cdef int i, j, l, lm
    cdef double tmp
    for j in range(n - 1):
        lm = min(kl, n - 1 - j)
        l = ipiv[j]
        if l != j:
            tmp = b[l]
            b[l] = b[j]
            b[j] = tmp
        for i in range(1, lm + 1):
            b[j + i] -= ab[kv + i, j] * b[j]
    for j in range(n - 1, -1, -1):
        b[j] /= ab[kv, j]
        tmp = b[j]
        for i in range(1, min(kv, j) + 1):
            b[j - i] -= ab[kv - i, j] * tmp


def gbtrs(double[::1, :] ab, int kl, int ku, int[::1] ipiv, double[::1] b):
    """Solve in place with the factors from gbtrf."""
    with nogil:
        _gbtrs(ab, kl, ku, ipiv, b)


cdef void _band_matvec(double[:, ::1] band, double[::1] x, double[::1] y) nogil:
    """y = B x for B stored row-wise: band[i, d] = B[i, i + d - 2]."""
    cdef int n = x.shape[0]
    cdef int i, d, j
    cdef double s
    for i in range(n):
        s = 0.0
        for d in range(5):
            j = i + d - 2
            if 0 <= j < n:
                s += band[i, d] * x[j]
        y[i] = s


def band_matvec(double[:, ::1] band, double[::1] x):
    out = np.empty(x.shape[0])
    cdef double[::1] y = out
    with nogil:
        _band_matvec(band, x, y)
    return out


def theta_march(double[::1, :] lu, int[::1] ipiv, double[:, ::1] band,
                double[::1] u0, double[::1] weights, cnp.uint8_t[::1] fixed,
                double dt, double theta, int nsteps, cnp.intp_t[::1] record):
    """Run nsteps theta-steps; diagnostics every step, snapshots at `record`.

    Returns (snapshots, mass, l2, linf) with diagnostics of length nsteps+1.
    """
    cdef int n = u0.shape[0]
    cdef int k, i, nrec = record.shape[0], ri = 0
    cdef double c = (1.0 - theta) * dt
    cdef double m, q, mx
    u_arr = np.array(u0, copy=True)
    bu_arr = np.empty(n)
    snaps = np.empty((nrec, n))
    mass = np.empty(nsteps + 1)
    l2 = np.empty(nsteps + 1)
    linf = np.empty(nsteps + 1)
    cdef double[::1] u = u_arr
    cdef double[::1] bu = bu_arr
    cdef double[:, ::1] sn = snaps
    cdef double[::1] ms = mass
    cdef double[::1] ls = l2
    cdef double[::1] li = linf
    with nogil:
        for k in range(nsteps + 1):
            if k > 0:
                if c != 0.0:
                    _band_matvec(band, u, bu)
                    for i in range(n):
                        u[i] -= c * bu[i]
                for i in range(n):
                    if fixed[i]:
                        u[i] = 0.0
                _gbtrs(lu, 2, 2, ipiv, u)
            m = 0.0
            q = 0.0
            mx = 0.0
            for i in range(n):
                m += weights[i] * u[i]
                q += weights[i] * u[i] * u[i]
                if fabs(u[i]) > mx:
                    mx = fabs(u[i])
            ms[k] = m
            ls[k] = sqrt(q)
            li[k] = mx
            while ri < nrec and record[ri] == k:
                for i in range(n):
                    sn[ri, i] = u[i]
                ri += 1
    return snaps, mass, l2, linf


# ---------------------------------------------------------------------------
# Nested integrals of the warped-line counterexample
# ---------------------------------------------------------------------------

def nested_levels(double[::1] r, int n, double eps):
    """Levels (w1, I2, w3, F) of the nested integral on a uniform grid from 0.

    w1 = phi^{1-n} int_0^r phi^{n-1},  I2 = int_0^r w1,
    w3 = phi^{1-n} int_0^r phi^{n-1} I2,  F = int_0^r w3,
    with phi = exp(r^{2+eps}); every phi ratio is formed in the log domain.
    """
    cdef int N = r.shape[0]
    cdef int k, q
    cdef double c = n - 1.0, p = 2.0 + eps
    cdef double h, a0, a1, L0, L1, tau, e, t, h00, h10, h01, h11, i2q
    cdef double s1, s3, d0, d1
    w1a = np.zeros(N)
    i2a = np.zeros(N)
    w3a = np.zeros(N)
    fa = np.zeros(N)
    cdef double[::1] w1 = w1a
    cdef double[::1] i2 = i2a
    cdef double[::1] w3 = w3a
    cdef double[::1] F = fa
    with nogil:
        for k in range(N - 1):
            h = r[k + 1] - r[k]
            L0 = r[k] ** p
            L1 = r[k + 1] ** p
            a0 = c * p * r[k] ** (p - 1.0)
            a1 = c * p * r[k + 1] ** (p - 1.0)
            e = exp(c * (L0 - L1))
            s1 = 0.0
            for q in range(16):
                tau = r[k] + 0.5 * h * (GL_X[q] + 1.0)
                s1 += GL_W[q] * exp(c * (tau ** p - L1))
            w1[k + 1] = e * w1[k] + 0.5 * h * s1
            d0 = 1.0 - a0 * w1[k]
            d1 = 1.0 - a1 * w1[k + 1]
            i2[k + 1] = i2[k] + 0.5 * h * (w1[k] + w1[k + 1]) + h * h / 12.0 * (d0 - d1)
            s3 = 0.0
            for q in range(16):
                t = 0.5 * (GL_X[q] + 1.0)
                tau = r[k] + h * t
                h00 = (1 + 2 * t) * (1 - t) * (1 - t)
                h10 = t * (1 - t) * (1 - t)
                h01 = t * t * (3 - 2 * t)
                h11 = t * t * (t - 1)
                i2q = h00 * i2[k] + h10 * h * w1[k] + h01 * i2[k + 1] + h11 * h * w1[k + 1]
                s3 += GL_W[q] * exp(c * (tau ** p - L1)) * i2q
            w3[k + 1] = e * w3[k] + 0.5 * h * s3
            d0 = i2[k] - a0 * w3[k]
            d1 = i2[k + 1] - a1 * w3[k + 1]
            F[k + 1] = F[k] + 0.5 * h * (w3[k] + w3[k + 1]) + h * h / 12.0 * (d0 - d1)
    return w1a, i2a, w3a, fa
