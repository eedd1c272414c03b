import numpy as np
import pytest

from biharm import euclid_kernel as ek
from biharm import kernel_probe as kp
from biharm import radial_solver as rs
from biharm import warped_geometry as wg


@pytest.fixture(scope="module")
def line_estimate():
    model = wg.euclidean(1)
    grid = wg.RadialGrid(-30.0, 30.0, 2000, ("clamped", "clamped"))
    return kp.estimate_kernel(model, grid, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_closed_form_mass(n):
    assert kp.check_conservation_closed_form(n, 0.5)["pass"]


def test_estimate_matches_kernel(line_estimate):
    exact = ek.kernel_point(1, line_estimate.r, 1.0)
    # Richardson over the two bump widths leaves ~1e-4 relative error
    assert np.max(np.abs(line_estimate.field - exact)) < 2e-4 * exact.max()
    assert kp.check_conservation(line_estimate)["pass"]


def test_decay_fit_line(line_estimate):
    rep = kp.check_kernel_decay(line_estimate, noise_floor=1e-8)
    assert abs(rep.p - 4 / 3) < 0.05
    assert rep.points >= 5


def test_decay_fit_hyperbolic():
    model = wg.hyperbolic(2, 1.0)
    grid = wg.RadialGrid(0.0, 45.0, 901, ("pole", "clamped"))
    est = kp.estimate_kernel(model, grid, 0.25)
    rep = kp.check_kernel_decay(est, noise_floor=1e-8)
    assert 1.2 <= rep.p <= 1.5


def test_too_few_maxima(line_estimate):
    with pytest.raises(kp.InsufficientEnvelopeError):
        kp.check_kernel_decay(line_estimate, noise_floor=1e-2)


def test_leak_detected():
    model = wg.euclidean(1)
    grid = wg.RadialGrid(-5.0, 5.0, 200, ("clamped", "clamped"))
    with pytest.raises(kp.LeakExceededError):
        kp.estimate_kernel(model, grid, 4.0)


def test_width_policy_checked():
    model = wg.euclidean(1)
    grid = wg.RadialGrid(-30.0, 30.0, 400, ("clamped", "clamped"))
    with pytest.raises(ValueError):
        kp.estimate_kernel(model, grid, 1.0, width_policy=(4.0, 6.0))


def test_bump_train_linfty_ratio():
    model = wg.euclidean(1)
    grid = wg.RadialGrid(-30.0, 30.0, 1000, ("clamped", "clamped"))
    r = grid.r
    u0 = np.zeros_like(r)
    for k, c in enumerate(np.arange(-6.0, 6.5, 2.0)):
        x = (r - c) / 0.9
        inside = np.abs(x) < 1
        u0[inside] += (-1) ** k * np.exp(1 - 1 / (1 - x[inside] ** 2))
    res = kp.check_linfty_contraction(model, grid, u0, bound=3.0)
    assert res["pass"]


def test_mean_value_ratio_finite():
    model = wg.euclidean(2)
    grid = wg.RadialGrid(0.0, 30.0, 1200, ("pole", "clamped"))
    disc = rs.build_discretization(model, grid)
    u0 = rs.delta_init(disc, 0.0, 8 * grid.h)
    times = tuple(np.linspace(0.0, 1.0, 101))
    traj = rs.run(model, grid, u0, rs.Schedule(1e-3, 1.0, times), disc)
    rec = kp.check_mean_value(model, traj, 0.9, 1.0)
    assert np.isfinite(rec["ratio"]) and rec["ratio"] > 0
    with pytest.raises(kp.WindowError):
        kp.check_mean_value(model, traj, 1.5, 1.0)


def test_random_bumps_deterministic():
    grid = wg.RadialGrid(-10.0, 10.0, 101, ("clamped", "clamped"))
    assert np.array_equal(kp.random_bumps(grid, 5), kp.random_bumps(grid, 5))
    assert not np.array_equal(kp.random_bumps(grid, 5), kp.random_bumps(grid, 6))
