import numpy as np
import pytest

from biharm import radial_solver as rs
from biharm import warped_geometry as wg
from biharm import weight_monitor as wm

R_LINE = np.linspace(-30.0, 30.0, 2001)


@pytest.mark.parametrize("variant,R", [("kernel", 1.0), ("uniqueness", 1.0), ("l2decay", 4.0)])
def test_calibration_certifies(variant, R):
    model = wg.euclidean(1)
    A, trace = wm.calibrate_A(wm.WeightSpec(variant, R, 0.5), model, R_LINE)
    spec = wm.WeightSpec(variant, R, 0.5, A=A)
    for scale in (1.0, 2.0):
        s = wm.WeightSpec(variant, R, 0.5, A=scale * A)
        assert max(wm.eval_dissipation(s, model, R_LINE, t).max for t in wm.time_lattice(0.5)) <= 0
    # just below the calibrated A the certificate fails
    low = wm.WeightSpec(variant, R, 0.5, A=A * (1 - 1e-5))
    assert max(wm.eval_dissipation(low, model, R_LINE, t).max for t in wm.time_lattice(0.5)) > 0
    w = wm.eval_weight(spec, model, R_LINE, 0.1)
    assert np.all(w.grad_xi ** 2 <= w.G * (1 + 1e-12))
    assert np.all(w.xi <= 0)
    assert trace[-1][0] > 0


@pytest.mark.parametrize("variant", ["kernel", "l2decay"])
def test_weight_is_c1_at_seams(variant):
    spec = wm.WeightSpec(variant, 4.0, 0.5, A=10.0)
    for _, jump, slope_jump in wm.seam_check(spec):
        assert jump < 1e-12 and slope_jump < 1e-12


def test_profile_derivatives_by_differences():
    for variant in ("kernel", "l2decay"):
        spec = wm.WeightSpec(variant, 4.0, 0.5, S=1.0)
        f = np.linspace(0.0, 12.0, 240001)
        P, P1, P2, _, _ = wm.profile(spec, f)
        h = f[1] - f[0]
        seams = [s for s, _, _ in wm.seam_check(spec)]
        away = np.ones(f.size, dtype=bool)
        away[[0, 1, -2, -1]] = False
        for s in seams:
            away &= np.abs(f - s) > 3 * h  # Phi'' may jump at a seam
        assert np.max(np.abs(np.gradient(P, h) - P1)[away]) < 1e-6
        assert np.max(np.abs(np.gradient(P1, h) - P2)[away]) < 1e-5


def test_horizon_enforced():
    model = wg.euclidean(1)
    with pytest.raises(wm.CalibrationError):
        wm.calibrate_A(wm.WeightSpec("kernel", 1.0, 5.0), model, R_LINE)
    # the l2decay horizon is strict: T = R fails
    with pytest.raises(wm.HorizonError):
        wm.check_horizon(wm.WeightSpec("l2decay", 4.0, 4.0), model)
    assert wm.horizon(wm.WeightSpec("uniqueness", 2.0, 1.0), wg.hyperbolic(2, 1.0)) == pytest.approx(
        2.0 / 2 ** 1.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        wm.WeightSpec("other", 1.0, 1.0)
    with pytest.raises(ValueError):
        wm.WeightSpec("l2decay", 1.0, 1.0, R1=2.0)


def test_time_lattice():
    t = wm.time_lattice(0.5)
    assert t.size == 32 and t[0] == 0.0
    assert 0.5 - t[-1] == pytest.approx(0.5e-4)


def test_weighted_l2_monotone_interior_bump():
    model = wg.hyperbolic(2, 1.0)
    grid = wg.RadialGrid(0.0, 20.0, 801, ("pole", "clamped"))
    disc = rs.build_discretization(model, grid)
    T = 0.25
    A, _ = wm.calibrate_A(wm.WeightSpec("kernel", 1.0, T), model, disc.r)
    spec = wm.WeightSpec("kernel", 1.0, T, A=A)
    x = disc.r
    u0 = np.where(x < 1, np.exp(1 - 1 / np.maximum(1 - x * x, 1e-300)), 0.0)
    times = tuple(np.arange(250) * 1e-3)
    traj = rs.run(model, grid, u0, rs.Schedule(1e-3, times[-1], times), disc)
    assert wm.monitor_weighted_l2(traj, spec)["max_increase"] <= 1e-8


def test_l2_decay_bound():
    model = wg.euclidean(1)
    grid = wg.RadialGrid(-40.0, 40.0, 1601, ("clamped", "clamped"))
    x = grid.r / 4.0
    u0 = np.where(np.abs(x) < 1, np.exp(1 - 1 / np.maximum(1 - x * x, 1e-300)), 0.0)
    res = wm.check_l2_exp_decay(model, grid, u0, 4.0, 0.5)
    assert res["pass"] and res["lhs"] < res["rhs"]
    with pytest.raises(ValueError):
        wm.check_l2_exp_decay(model, grid, np.ones_like(grid.r), 4.0, 0.5)
