import numpy as np
import pytest

from biharm import euclid_kernel as ek
from biharm import kernel_probe as kp
from biharm import radial_solver as rs
from biharm import warped_geometry as wg


def line(N=801, L=20.0):
    return wg.euclidean(1), wg.RadialGrid(-L, L, N, ("clamped", "clamped"))


def test_weighted_operator_is_symmetric():
    for model, grid in [line(), (wg.hyperbolic(3, 1.0), wg.RadialGrid(0.0, 10.0, 201))]:
        disc = rs.build_discretization(model, grid)
        assert disc.symmetry_residual < 1e-12


def test_delta_init_normalized_and_supported():
    model, grid = line()
    disc = rs.build_discretization(model, grid)
    w = 4 * grid.h
    u = rs.delta_init(disc, 1.0, w)
    assert np.dot(disc.weights, u) == pytest.approx(1.0, abs=1e-14)
    assert np.all(u >= 0)
    assert np.all(u[np.abs(disc.r - 1.0) >= 4 * w] == 0)


def test_delta_init_guards():
    model, grid = line()
    disc = rs.build_discretization(model, grid)
    with pytest.raises(rs.WidthTooSmallError):
        rs.delta_init(disc, 0.0, grid.h)
    with pytest.raises(ValueError):
        rs.delta_init(disc, 19.5, 4 * grid.h)


def test_schedule_validation():
    with pytest.raises(ValueError):
        rs.Schedule(0.0, 1.0)
    with pytest.raises(ValueError):
        rs.Schedule(1e-3, 1.0, (), theta=0.4)
    with pytest.raises(ValueError):
        rs.Schedule(1e-3, 1.0, (2.0,))


def test_step_mass_change_equals_boundary_flux():
    # telescoping oracle: the mass change of one step is dt times the
    # theta-average of the face fluxes next to the clamped ends
    model, grid = line(401, 10.0)
    disc = rs.build_discretization(model, grid)
    u = kp.random_bumps(grid, 3, count=6)
    u[disc.fixed] = 0.0
    state = rs.EvolutionState(0.0, u, 0)
    for theta in (0.5, 1.0):
        dt = 1e-2
        new = rs.step(disc, state, dt, theta)
        dm = np.dot(disc.weights, new.u) - np.dot(disc.weights, u)
        flux = theta * rs.boundary_flux(disc, new.u) + (1 - theta) * rs.boundary_flux(disc, u)
        assert dm == pytest.approx(dt * flux, rel=1e-9)


def test_mass_drift_small_for_interior_bump():
    model, grid = line(1601, 40.0)
    disc = rs.build_discretization(model, grid)
    u0 = rs.delta_init(disc, 0.0, 0.4)
    traj = rs.run(model, grid, u0, rs.Schedule(1e-3, 1.0, (1.0,)), disc)
    assert np.max(np.abs(traj.mass - 1.0)) < 1e-8


@pytest.mark.parametrize("theta", [0.5, 0.75, 1.0])
@pytest.mark.parametrize("case", ["euclidean1", "euclidean3", "hyperbolic2", "appendix2"])
def test_l2_norm_nonincreasing(theta, case):
    model, grid = {
        "euclidean1": line(),
        "euclidean3": (wg.euclidean(3), wg.RadialGrid(0.0, 20.0, 401)),
        "hyperbolic2": (wg.hyperbolic(2, 1.0), wg.RadialGrid(0.0, 20.0, 401)),
        "appendix2": (wg.appendix(2, 1.0), wg.RadialGrid(-2.0, 2.0, 401, ("reflect", "reflect"))),
    }[case]
    span = (grid.r[0] + 0.25 * (grid.r[-1] - grid.r[0]), grid.r[-1] - 0.25 * (grid.r[-1] - grid.r[0]))
    u0 = kp.random_bumps(grid, 11, count=4, span=span)
    traj = rs.run(model, grid, u0, rs.Schedule(1e-3, 0.2, (), theta))
    l2 = traj.l2_norm
    assert np.all(l2[1:] <= l2[:-1] * (1 + 1e-12))


def test_delta_converges_to_kernel_second_order():
    errs = []
    for N in (500, 1000, 2000):
        model, grid = line(N, 30.0)
        disc = rs.build_discretization(model, grid)
        u0 = rs.delta_init(disc, 0.0, 4 * grid.h)
        u = rs.run(model, grid, u0, rs.Schedule(1e-3, 1.0, (1.0,)), disc).states[-1].u
        exact = ek.kernel_point(1, grid.r, 1.0)
        errs.append(np.max(np.abs(u - exact)) / exact.max())
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_output_time_snapping():
    model, grid = line(201, 10.0)
    u0 = kp.random_bumps(grid, 1, count=2, span=(-3.0, 3.0))
    traj = rs.run(model, grid, u0, rs.Schedule(0.01, 0.1, (0.0, 0.0349, 0.1)))
    assert [round(s.t, 12) for s in traj.states] == [0.0, 0.03, 0.1]
    assert traj.at(0.031).t == pytest.approx(0.03)


def test_energy_m0_is_l2():
    model, grid = line(201, 10.0)
    disc = rs.build_discretization(model, grid)
    u = np.exp(-disc.r ** 2)
    assert rs.energy(disc, u, 0) == pytest.approx(rs.diagnose(disc, u).l2_norm)


def test_pole_grid_on_line_model_rejected():
    with pytest.raises((rs.IncompatibleTopologyError, ValueError)):
        rs.build_discretization(wg.appendix(2, 1.0), wg.RadialGrid(0.0, 2.0, 101, ("pole", "clamped")))
