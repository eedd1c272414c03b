"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest
from scipy.special import jv

from biharm import kernels
from biharm import radial_solver as rs
from biharm import warped_geometry as wg

py = kernels.backend("python")
try:
    cy = kernels.backend("compiled")
except ImportError:  # extension not built
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def _zgrid(nu):
    z = np.linspace(0.0, 120.0, 2401)
    return z[1:] if nu < 0 else z  # J_{-1/2} is singular at 0


def test_backend_names():
    assert kernels.BACKEND in ("compiled", "python")
    with pytest.raises(ValueError):
        kernels.backend("fortran")


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.3])
def test_fallback_bessel_against_scipy(nu):
    z = _zgrid(nu)
    assert np.max(np.abs(py.bessel_j(nu, z) - jv(nu, z))) < 1e-12


@needs_compiled
@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.3])
def test_bessel_backends_agree(nu):
    z = _zgrid(nu)
    assert np.max(np.abs(cy.bessel_j(nu, z) - py.bessel_j(nu, z))) < 1e-13


@needs_compiled
@pytest.mark.parametrize("n", [1, 2, 3])
def test_profile_direct_backends_agree(n):
    eta = np.linspace(0.0, 14.0, 57)
    a, _ = cy.profile_direct(n, eta)
    b, _ = py.profile_direct(n, eta)
    assert np.allclose(a, b, rtol=1e-11, atol=1e-16)


@needs_compiled
def test_contours_agree():
    for eta in (15.0, 22.5, 35.0):
        assert np.allclose(cy.contour_odd(eta, 2), py.contour_odd(eta, 2), rtol=1e-11, atol=1e-300)
        assert cy.contour_even(0, eta) == pytest.approx(py.contour_even(0, eta), rel=1e-10)


def _system():
    model = wg.hyperbolic(2, 1.0)
    grid = wg.RadialGrid(0.0, 10.0, 201, ("pole", "clamped"))
    return rs.build_discretization(model, grid)


@needs_compiled
def test_band_solvers_agree():
    disc = _system()
    ab = rs._system_band(disc.band, disc.fixed, 0.5e-3)
    ab2 = ab.copy(order="F")
    p1, i1 = cy.gbtrf(ab, 2, 2)
    p2, i2 = py.gbtrf(ab2, 2, 2)
    assert i1 == i2 == 0
    rhs = np.sin(disc.r)
    x1, x2 = rhs.copy(), rhs.copy()
    cy.gbtrs(ab, 2, 2, p1, x1)
    py.gbtrs(ab2, 2, 2, p2, x2)
    assert np.allclose(x1, x2, rtol=1e-12, atol=1e-14)
    u = np.cos(disc.r)
    assert np.allclose(cy.band_matvec(disc.band, u), py.band_matvec(disc.band, u), rtol=1e-13,
                       atol=1e-10)


@needs_compiled
def test_theta_march_agrees():
    disc = _system()
    ab, ipiv = disc.factor(1e-3, 0.5)
    u0 = np.exp(-(disc.r - 3.0) ** 2)
    u0[disc.fixed] = 0.0
    rec = np.array([0, 5, 20], dtype=np.intp)
    args = (ab, ipiv, disc.band, u0, disc.weights, disc.fixed.astype(np.uint8), 1e-3, 0.5, 20, rec)
    out_c = cy.theta_march(*args)
    out_p = py.theta_march(*args)
    for a, b in zip(out_c, out_p):
        assert np.allclose(a, b, rtol=1e-11, atol=1e-14)


@needs_compiled
def test_nested_levels_agree():
    r = np.linspace(0.0, 4.0, 801)
    for a, b in zip(cy.nested_levels(r, 2, 1.0), py.nested_levels(r, 2, 1.0)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)
