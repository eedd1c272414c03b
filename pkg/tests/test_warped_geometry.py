import math

import numpy as np
import pytest

from biharm import warped_geometry as wg


def test_appendix_warp_derivatives_by_differences():
    m = wg.appendix(2, 1.0)
    h = 1e-5
    w = wg.warp_eval(m, 1.0)
    phi = lambda r: wg.warp_eval(m, r).phi
    assert (phi(1 + h) - phi(1 - h)) / (2 * h) == pytest.approx(w.dphi, rel=1e-8)
    assert (phi(1 + h) - 2 * phi(1) + phi(1 - h)) / h ** 2 == pytest.approx(w.ddphi, rel=1e-5)


def test_log_warp_survives_overflow():
    m = wg.appendix(3, 1.0)
    logphi, d1, _ = wg.log_warp(m, np.array([20.0]))
    assert logphi[0] == pytest.approx(8000.0)
    assert d1[0] == pytest.approx(3 * 400.0)


@pytest.mark.parametrize("n", [2, 3])
def test_laplacian_of_r_squared_is_2n(n):
    grid = wg.RadialGrid(0.0, 4.0, 64, ("pole", "clamped"))
    lap = wg.radial_laplacian(wg.euclidean(n), grid.r ** 2, grid)
    assert np.max(np.abs(lap - 2 * n)) < 1e-10


@pytest.mark.parametrize("case", ["euclidean3", "hyperbolic2", "appendix2"])
def test_laplacian_second_order(case):
    model = {"euclidean3": wg.euclidean(3), "hyperbolic2": wg.hyperbolic(2, 1.0),
             "appendix2": wg.appendix(2, 1.0)}[case]
    n = model.n
    errs = []
    for N in (101, 201, 401):
        if model.topology == "pole":
            grid = wg.RadialGrid(0.0, 2.0, N, ("pole", "clamped"))
        else:
            grid = wg.RadialGrid(-2.0, 2.0, N, ("reflect", "reflect"))
        r = grid.r
        f = np.exp(-r ** 2)
        _, d1, _ = wg.log_warp(model, r)
        with np.errstate(all="ignore"):
            exact = (4 * r ** 2 - 2) * f + (n - 1) * np.where(r != 0, d1 * (-2 * r * f), 0.0)
        if model.topology == "pole":
            exact[0] = -2.0 * n
        lap = wg.radial_laplacian(model, f, grid)
        errs.append(np.max(np.abs(lap - exact)[1:-1]))
    assert 3.8 < errs[0] / errs[1] < 4.2
    assert 3.8 < errs[1] / errs[2] < 4.2


def test_divergence_form_is_symmetric():
    model = wg.hyperbolic(3, 1.0)
    r = np.linspace(0.0, 5.0, 101)
    lo, d, up, logv = wg.laplacian_stencil(model, r)
    v = np.exp(logv)
    # V_i up_i == V_{i+1} lo_{i+1}
    assert np.allclose(v[:-1] * up[:-1], v[1:] * lo[1:], rtol=1e-13)


def test_grid_validation():
    with pytest.raises(wg.GridTooCoarseError):
        wg.RadialGrid(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        wg.RadialGrid(1.0, 2.0, 32, ("pole", "clamped"))
    with pytest.raises(wg.GridTooCoarseError):
        wg.radial_laplacian(wg.euclidean(2), np.zeros(3), np.linspace(0, 1, 3))
    with pytest.raises(wg.DomainError):
        wg.warp_eval(wg.euclidean(3), -1.0)


def test_hyperbolic_volume_closed_form():
    # n = 3, K = 1: V(r) = pi (sinh 2r - 2r)
    for r in (0.5, 1.0, 2.0):
        rep = wg.volume_report(wg.hyperbolic(3, 1.0), r)
        assert rep.V == pytest.approx(math.pi * (math.sinh(2 * r) - 2 * r), rel=1e-11)


def test_euclidean_volume_ratio_is_one():
    for n in (1, 2, 3):
        assert wg.volume_report(wg.euclidean(n), 2.5).nu == pytest.approx(1.0, rel=1e-12)


def test_negative_curvature_volume_ratio_grows():
    # nu = V / (omega r^n) increases with r when the curvature is negative
    m = wg.hyperbolic(3, 1.0)
    assert wg.volume_report(m, 1.0).nu < wg.volume_report(m, 2.0).nu


def test_ricci_bounds():
    assert wg.ricci_lower_bound(wg.euclidean(3), 5.0) == 0.0
    assert wg.ricci_lower_bound(wg.hyperbolic(3, 2.0), 5.0) == pytest.approx(4.0)
    env = wg.ricci_lower_bound(wg.appendix(2, 1.0), np.array([0.5, 1.0, 2.0]))
    assert np.all(np.diff(env) >= 0)
    # radial term (n-1) phi''/phi at r = 1 for n = 2, eps = 1: 6 + 9
    assert wg.ricci_lower_bound(wg.appendix(2, 1.0), 1.0) == pytest.approx(15.0, rel=1e-9)
