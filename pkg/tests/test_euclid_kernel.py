import math

import numpy as np
import pytest

from biharm import euclid_kernel as ek

# F_n(eta) from 30-digit mpmath quadrature of the Bessel integral
# int_0^inf exp(-s^4) eta^{1-n} (eta s)^{n/2} J_{(n-2)/2}(eta s) ds.
ETAS = (0.0, 1.0, 2.5, 7.0, 12.0, 18.0)
PROFILE_ORACLE = {
    1: (0.72320454231603857, 0.60827118730038789, 0.19922330045271861,
        0.0044577394645198624, -0.00017123916507457411, 5.0256510261045686e-6),
    2: (0.44311346272637901, 0.38396899998038993, 0.16436268458950536,
        -0.0024028402015571052, -0.00015170872622307994, 1.2634605459799404e-6),
    3: (0.24443526686173095, 0.21578549463044693, 0.10606521638215057,
        -0.0025051472935168574, -7.1045838108163486e-5, 2.0488472687328096e-7),
}
# First three zeros of F_n, mpmath findroot on the same integral.
ROOT_ORACLE = {1: (3.45346412836, 6.78432774798, 9.63585888628),
               2: (4.04950397929, 7.2773598232, 10.0788970751),
               3: (4.5918140915, 7.74722595964, 10.5078432694)}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_profile_matches_high_precision_quadrature(n):
    got = ek.profile_values(n, np.array(ETAS))
    ref = np.array(PROFILE_ORACLE[n])
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_profile_at_origin_closed_form(n):
    nu = (n - 2) / 2
    exact = math.gamma(n / 4) / (4 * 2 ** nu * math.gamma(nu + 1))
    assert ek.profile_values(n, np.array([0.0]))[0] == pytest.approx(exact, rel=1e-13)


def test_profile_continuous_across_contour_switch():
    # a jump at eta = 14 would show up undamped in the fourth difference
    eta = 14.0 + 1e-3 * np.arange(-2, 3)
    for n in (1, 2, 3):
        v = ek.profile_values(n, eta)
        d4 = v[0] - 4 * v[1] + 6 * v[2] - 4 * v[3] + v[4]
        assert abs(d4) < 1e-9 * np.max(np.abs(v))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_alpha_is_fourier_normalization(n):
    assert ek.alpha(n) == pytest.approx((2 * math.pi) ** (-n / 2), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_point_matches_oracle(n):
    for x, t in [(0.0, 1.0), (1.3, 1.0), (5.0, 1.0), (2.0, 0.3), (7.0, 2.0)]:
        assert ek.kernel_point(n, x, t) == pytest.approx(ek.kernel_oracle(n, x, t), rel=1e-9)


def test_kernel_scaling_law():
    # b(x, t) = t^{-n/4} b(x / t^{1/4}, 1)
    for n in (1, 2, 3):
        assert ek.kernel_point(n, 3.0, 16.0) == pytest.approx(
            16.0 ** (-n / 4) * ek.kernel_point(n, 1.5, 1.0), rel=1e-12)


def test_kernel_rejects_nonpositive_time():
    with pytest.raises(ek.DomainError):
        ek.kernel_point(1, 0.0, 0.0)
    with pytest.raises(ek.DomainError):
        ek.kernel_oracle(4, 1.0, 1.0)


@pytest.mark.parametrize("n", [1, 3])
def test_sign_change_roots(n):
    roots = ek.sign_change_roots(n, 20.0, 10 ** 4)
    assert len(roots) == 7
    assert np.allclose(roots[:3], ROOT_ORACLE[n], atol=2e-6)


def test_sign_changes_need_resolution():
    with pytest.raises(ValueError):
        ek.count_sign_changes(1, 20.0, 10)


def test_decay_fit_prefers_four_thirds():
    rep = ek.fit_decay_exponent(1, 5.0, 30.0)
    assert abs(rep["p"] - 4 / 3) < 0.01
    # the plain fit without the algebraic prefactor is visibly biased low
    assert rep["p_plain"] < rep["p"]


def test_decay_fit_window_checked():
    with pytest.raises(ValueError):
        ek.fit_decay_exponent(1, 1.0, 30.0)


def test_sphere_and_ball():
    assert ek.sphere_area(3) == pytest.approx(4 * math.pi)
    assert ek.ball_volume(3) == pytest.approx(4 * math.pi / 3)
    assert ek.sphere_area(2) == pytest.approx(2 * math.pi)
