import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid, solve_ivp

from biharm import counterexample as ce


@pytest.fixture(scope="module")
def nf():
    return ce.nested_F(1.0, 2)


def brute_force_F(r_end, n=2, eps=1.0, nodes=200001):
    """The nested display by four cumulative trapezoid sweeps (no log domain)."""
    r = np.linspace(0.0, r_end, nodes)
    up = np.exp((n - 1) * r ** (2 + eps))
    a = cumulative_trapezoid(up, r, initial=0.0) / up
    b = cumulative_trapezoid(a, r, initial=0.0)
    c = cumulative_trapezoid(up * b, r, initial=0.0) / up
    return cumulative_trapezoid(c, r, initial=0.0)[-1]


def test_default_rmax():
    assert ce.default_rmax(2, 1.0) == pytest.approx(700.0 ** (1 / 3))
    with pytest.raises(ValueError):
        ce.default_rmax(1, 1.0)
    with pytest.raises(ValueError):
        ce.nested_F(0.0, 2)


def test_starts_flat(nf):
    assert nf.F[0] == 0.0
    assert nf.w3[0] == 0.0  # F'(0)
    assert np.all(np.diff(nf.F) >= 0)


def test_F_at_one_matches_brute_force(nf):
    r = np.linspace(0.0, 1.0, 2001)
    F1 = ce.kernels.nested_levels(r, 2, 1.0)[3][-1]
    assert F1 == pytest.approx(brute_force_F(1.0), rel=1e-6)


def test_F_matches_ode_integration(nf):
    b = 3.0

    def rhs(r, y):
        a = b * r * r
        return [1 - a * y[0], y[0], y[1] - a * y[2], y[2]]

    sol = solve_ivp(rhs, (0.0, 3.0), [0, 0, 0, 0], method="Radau", rtol=1e-12, atol=1e-15,
                    dense_output=True)
    i = np.searchsorted(nf.r, 3.0)
    assert nf.F[i] == pytest.approx(sol.sol(nf.r[i])[3], rel=1e-8)


def test_sup_stable_under_extension(nf):
    ext = ce.nested_F(1.0, 2, r_max=1.5 * nf.r[-1], nodes=4001)
    assert abs(ext.F_sup - nf.F_sup) <= 1e-6 * nf.F_sup
    # the tail beyond r_max is a real part of the sup
    assert nf.tail > 0.01


def test_bilaplacian_is_one(nf):
    v = ce.verify_bilaplacian_one(nf, nodes=4000)
    assert v["max_abs_residual"] <= 1e-3
    assert v["max_lap_minus_I2"] <= 1e-5


def test_bilaplacian_second_order(nf):
    res = [ce.verify_bilaplacian_one(nf, nodes=N)["max_abs_residual"] for N in (500, 1000, 2000)]
    assert 3.6 < res[0] / res[1] < 4.4
    assert 3.6 < res[1] / res[2] < 4.4


def test_growth_is_linear(nf):
    g = ce.growth_run(nf)
    assert g["linf"][0] == nf.F_sup
    assert g["linf"][-1] == pytest.approx(10 * nf.F_sup, rel=1e-15)
    assert abs(g["slope_min"] - 1) <= 1e-12 and abs(g["slope_max"] - 1) <= 1e-12
    with pytest.raises(ValueError):
        ce.growth_run(nf, t_max=nf.F_sup)


def test_solver_sees_unit_bilaplacian(nf):
    assert ce.solver_crosscheck(nf)["max_deviation"] <= 1e-2


def test_other_parameters_bounded():
    a = ce.nested_F(1.0, 3)
    b = ce.nested_F(0.5, 2)
    assert 0 < a.F_sup < b.F_sup < math.inf
