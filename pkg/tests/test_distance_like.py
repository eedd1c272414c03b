import math

import numpy as np
import pytest

from biharm import distance_like as dl
from biharm import warped_geometry as wg


def test_eta_profile_bounds():
    x = np.linspace(-1.0, 3.0, 40001)
    e0, e1, e2 = (dl.eta_profile(x, k) for k in range(3))
    assert e0[x <= 1].min() == 1.0 and e0[x >= 2].max() == 0.0
    assert e1.min() >= -15 / 8 - 1e-12 and e1.max() <= 0.0
    assert np.max(np.abs(e2)) <= 10 / math.sqrt(3) + 1e-9
    # derivatives consistent with differences
    h = x[1] - x[0]
    assert np.allclose(np.gradient(e0, h)[1:-1], e1[1:-1], atol=1e-6)


@pytest.mark.parametrize("lam,outer", [(2.0, 6.0), (12.1, 41.0)])
def test_dirichlet_against_closed_form(lam, outer):
    # n = 3: h = (a/r) sinh(k(b - r)) / sinh(k(b - a)), k = sqrt(lam)
    model = wg.euclidean(3)
    r, h = dl.solve_radial_dirichlet(model, lam, 0.5, outer)
    k = math.sqrt(lam)
    exact = 0.5 / r * np.sinh(k * (outer - r)) / np.sinh(k * (outer - 0.5))
    assert np.max(np.abs(h[:-1] / exact[:-1] - 1)) < 1e-7


def test_default_A_and_lambda():
    cfg = dl.ScaffoldConfig(wg.euclidean(3), 20.0, 0.0)
    A = (4 / 3) * (3 + 1 + 1)
    assert cfg.A == pytest.approx(A) if cfg.A is not None else dl.default_A(0.0) == pytest.approx(A)
    assert cfg.lam == pytest.approx(A * A / 4 + 1)


@pytest.mark.parametrize("K", [0.0, 1.0])
def test_scaffold_dominates_distance(K):
    model = wg.euclidean(3) if K == 0 else wg.hyperbolic(3, K)
    sc = dl.build_scaffold(dl.ScaffoldConfig(model, 20.0, K))
    band = (sc.r >= 2.0) & (sc.r <= 20.0)
    assert np.all(sc.f[band] >= sc.r[band])
    # equality is attained somewhere by the choice of Cbar
    assert np.min(sc.f[band] - sc.r[band]) == pytest.approx(0.0, abs=1e-12)
    rep = dl.verify_scaffold(sc)
    assert rep["pass"] and rep["Lambda_low"] >= 1.0


def test_scaffold_derivatives_consistent():
    sc = dl.build_scaffold(dl.ScaffoldConfig(wg.euclidean(3), 20.0, 0.0))
    h = sc.r[1] - sc.r[0]
    df = np.gradient(sc.f, h)
    inner = (sc.r > 2.5) & (sc.r < 19.0)
    assert np.max(np.abs(df[inner] - sc.df[inner])) < 1e-3 * np.max(np.abs(sc.df[inner]))
    lap = wg.radial_laplacian(wg.euclidean(3), sc.f, sc.r)
    assert np.max(np.abs(lap[inner] - sc.lapf[inner])) < 1e-3 * np.max(np.abs(sc.lapf[inner]))


def test_cutoff_bounds_hold():
    sc = dl.build_scaffold(dl.ScaffoldConfig(wg.hyperbolic(3, 1.0), 20.0, 1.0))
    b = dl.cutoff_bounds(sc, 10.0, 1.0)
    assert b["pass"]
    assert b["grad_C"] <= b["grad_allowed"] * 1.02


def test_cutoff_profile_limits():
    cfg = dl.ScaffoldConfig(wg.euclidean(3), 20.0, 0.0)
    f = np.array([5.0, 20.0, 20.5, 21.0, 30.0])
    phi = dl.build_cutoff(cfg, f)
    assert phi[0] == 1.0 and phi[1] == 1.0 and phi[-1] == 0.0 and phi[-2] == 0.0
    assert 0.0 < phi[2] < 1.0


def test_glue_keeps_lower_bound():
    r, f, reports = dl.glue(wg.euclidean(3), 0.0, 4.0, 2, 6.6)
    assert reports[-1]["annulus"][1] == pytest.approx(4.0 * 13.2)
    assert all(rep["Lambda_low"] >= 1.0 - 1e-12 for rep in reports)
