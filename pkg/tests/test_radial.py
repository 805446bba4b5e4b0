import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import ive, kve, factorial2

from ddlpb import radial
from ddlpb.errors import NonPositiveArgument

KAPPAS = (0.01, 0.104, 1.0, 5.0)
RADII = (0.1, 0.5, 2.0, 10.0, 50.0)


def scipy_log_i(ell, x):
    # i_l(x) = sqrt(pi/2x) I_{l+1/2}(x),  ive = I e^-x
    return np.log(np.sqrt(np.pi / (2 * x)) * ive(ell + 0.5, x)) + x


def scipy_log_k(ell, x):
    return np.log(np.sqrt(2 / (np.pi * x)) * kve(ell + 0.5, x)) - x


def quad_k(ell, x):
    """K_{l+1/2}(x) from its integral representation (brute-force oracle)."""
    nu = ell + 0.5
    val, _ = integrate.quad(lambda t: np.exp(-x * np.cosh(t)) * np.cosh(nu * t),
                            0, 8.0, epsabs=0, epsrel=1e-13, limit=200)
    return np.sqrt(2 / (np.pi * x)) * val


def fd_log(fn, r, h):
    """Five-point derivative of log f; f given through its log."""
    return (-fn(r + 2 * h) + 8 * fn(r + h) - 8 * fn(r - h) + fn(r - 2 * h)) / (12 * h)


def test_i0_closed_form():
    v, d, scale = radial.bessel_i_family(1.0, 0, 1.0)
    assert abs(v[0] * np.exp(scale) - np.sinh(1.0)) < 1e-12


@pytest.mark.parametrize("x", [1e-8, 1e-4, 1e-3, 1e-2])
def test_log_i0_small_argument_relative(x):
    # log(sinh x / x) Taylor series; the next term x^8/37800 is far below eps here
    ref = x**2 / 6 - x**4 / 180 + x**6 / 2835
    assert abs(radial.log_i0(x) / ref - 1) < 1e-14


def test_log_i0_branch_continuity():
    x = np.array([1.0 - 1e-12, 1.0, 1.0 + 1e-12])
    v = radial.log_i0(x)
    assert np.abs(np.diff(v)).max() < 1e-11


def test_k0_closed_form():
    v, d, scale = radial.bessel_k_family(1.0, 0, 2.0)
    assert abs(v[0] * np.exp(scale) - np.exp(-2) / 2) < 1e-13
    assert abs(np.exp(-2) / 2 - 0.0676676416) < 1e-10


@pytest.mark.parametrize("r", [1e-3, 1e-5])
def test_small_argument_law(r):
    v, _, scale = radial.bessel_i_family(1.0, 2, r)
    approx = r**2 / factorial2(5)
    assert abs(v[2] * np.exp(scale) / approx - 1) < 1e-5


def test_derivative_example_fd():
    kappa, ell, r, h = 2.0, 7, 5.0, 1e-3
    v, d, scale = radial.bessel_i_family(kappa, ell, r)
    f = lambda rr: radial.log_i(kappa * rr, ell)[ell]
    fd = fd_log(f, r, h) * v[ell]
    assert abs(d[ell] / fd - 1) < 1e-8


def test_k_values_against_quadrature():
    v, _, scale = radial.bessel_k_family(1.0, 5, 10.0)
    vals = v * np.exp(scale)
    ref = np.array([quad_k(l, 10.0) for l in range(6)])
    assert np.all(vals > 0)
    assert np.allclose(vals, ref, rtol=1e-10, atol=0)
    # k_{l+1}/k_l = (2l+1)/x + k_{l-1}/k_l > 1, so the family grows with l
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("x", [1e-8, 1e-3, 0.2, 1.0, 7.5, 40.0, 300.0, 1e4])
def test_log_values_against_scipy(x):
    L = 30
    li = radial.log_i(np.array(x), L)
    lk = radial.log_k(np.array(x), L)
    for ell in range(L + 1):
        ri, rk = scipy_log_i(ell, x), scipy_log_k(ell, x)
        if np.isfinite(ri):
            assert abs(li[ell] - ri) <= 1e-11 * max(1, abs(ri))
        if np.isfinite(rk):
            assert abs(lk[ell] - rk) <= 1e-11 * max(1, abs(rk))


@pytest.mark.parametrize("kappa", KAPPAS + (0.104,))
@pytest.mark.parametrize("r", RADII)
def test_wronskian_both_forms(kappa, r):
    L = 25
    vi, di, si = radial.bessel_i_family(kappa, L, r)
    vk, dk, sk = radial.bessel_k_family(kappa, L, r)
    x = kappa * r
    # scales cancel: e^{x} e^{-x}
    w_r = vi * dk - di * vk
    assert np.all(np.abs(w_r / (-kappa / x**2) - 1) < 1e-10)
    w_x = w_r / kappa
    assert np.all(np.abs(w_x / (-1 / x**2) - 1) < 1e-10)


def test_wronskian_example():
    vi, di, _ = radial.bessel_i_family(0.104, 11, 2.0)
    vk, dk, _ = radial.bessel_k_family(0.104, 11, 2.0)
    x = 0.208
    assert abs((vi[11] * dk[11] - di[11] * vk[11]) / (-0.104 / x**2) - 1) < 1e-10


@pytest.mark.parametrize("kappa", [0.104, 1.0])
@pytest.mark.parametrize("r", [0.1, 0.7, 3.0, 12.0, 50.0])
def test_derivative_recurrence_and_fd(kappa, r):
    L = 25
    vi, di, _ = radial.bessel_i_family(kappa, L + 1, r)
    vk, dk, _ = radial.bessel_k_family(kappa, L + 1, r)
    for ell in range(1, L + 1):
        # standard recurrences, derivative in r
        rec_i = kappa * (ell * vi[ell - 1] + (ell + 1) * vi[ell + 1]) / (2 * ell + 1)
        rec_k = -kappa * (ell * vk[ell - 1] + (ell + 1) * vk[ell + 1]) / (2 * ell + 1)
        assert abs(di[ell] / rec_i - 1) < 1e-8
        assert abs(dk[ell] / rec_k - 1) < 1e-8
    h = 1e-3 * r
    for ell in range(L + 1):
        fi = lambda rr: radial.log_i(kappa * rr, L)[ell]
        fk = lambda rr: radial.log_k(kappa * rr, L)[ell]
        assert abs(di[ell] / vi[ell] / fd_log(fi, r, h) - 1) < 1e-8
        assert abs(dk[ell] / vk[ell] / fd_log(fk, r, h) - 1) < 1e-8


def test_kappa_to_zero_limit():
    r = np.array([0.3, 1.0, 1.7])
    got = radial.interior_ratio(1e-6, 10, r, 2.0)
    ref = (r / 2.0) ** np.arange(11)[:, None]
    assert np.abs(got - ref).max() < 1e-6
    # the exterior factors carry a first-order term e^{-kappa dr} ~ 1 - kappa dr
    ext = radial.exterior_ratio(1e-6, 10, r + 2.0, 2.0)
    ref_e = (2.0 / (r + 2.0)) ** (np.arange(11)[:, None] + 1)
    assert np.abs(ext - ref_e).max() < 2e-6
    sl = radial.single_layer_factor(1e-6, 10, 2.0)
    assert np.abs(sl - 2.0 / (2 * np.arange(11) + 1)).max() < 5e-6


def test_zero_kappa_path_exact():
    assert np.array_equal(radial.interior_ratio(0.0, 3, 1.0, 2.0),
                          0.5 ** np.arange(4.0))
    assert np.allclose(radial.dlog_i(0.0, 3, 2.0), np.arange(4) / 2.0)


def test_interior_ratio_at_origin():
    out = radial.interior_ratio(0.5, 4, np.array([0.0]), 2.0)
    assert out[0, 0] == 1.0 and np.all(out[1:, 0] == 0.0)


def test_ratio_examples():
    assert abs(radial.ratio_ip_over_i(1.0, 0, 1.0) - (1 / np.tanh(1.0) - 1)) < 1e-12
    assert abs(radial.ratio_ip_over_i(1.0, 0, 1.0) - 0.3130352855) < 1e-10
    assert abs(radial.ratio_kp_over_k(1.0, 0, 1.0) + 2.0) < 1e-14
    a = radial.ratio_ip_over_i(500.0, 4, 3.0)
    b = radial.ratio_kp_over_k(500.0, 4, 3.0)
    assert np.isfinite(a) and np.isfinite(b)


def test_large_kappa_operator_factors_finite():
    r = np.array([1.5, 2.0, 3.0])
    for kappa in (1e2, 1e3, 1e4):
        assert np.all(np.isfinite(radial.exterior_ratio(kappa, 10, r, 1.5)))
        assert np.all(np.isfinite(radial.interior_ratio(kappa, 10, r, 3.0)))
        assert np.all(np.isfinite(radial.single_layer_factor(kappa, 10, r)))
        assert np.all(np.isfinite(radial.dlog_i(kappa, 10, r)))


def test_monotone_in_r():
    r = np.linspace(0.2, 30, 60)
    ti = radial.BesselTable.build(0.3, 8, r)
    li = np.log(ti.scaled_i) + ti.log_scales
    lk = np.log(ti.scaled_k) - ti.log_scales
    assert np.all(np.diff(li, axis=1) > 0)
    assert np.all(np.diff(lk, axis=1) < 0)
    assert np.all(ti.i() > 0) and np.all(ti.k() > 0)


def test_rejects_bad_arguments():
    with pytest.raises(NonPositiveArgument):
        radial.bessel_i_family(0.0, 3, 1.0)
    with pytest.raises(NonPositiveArgument):
        radial.bessel_k_family(1.0, 3, -1.0)
    with pytest.raises(NonPositiveArgument):
        radial.ratio_ip_over_i(1.0, 2, 0.0)
    with pytest.raises(NonPositiveArgument):
        radial.interior_ratio(-1.0, 2, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1e3), st.integers(0, 20))
def test_ratio_bounds(x, ell):
    # 0 < i_{l+1}/i_l < x/(2l+3)  and  k_{l+1}/k_l > (2l+1)/x
    rho = radial.i_ratios(np.array(x), ell)[ell]
    sigma = radial.k_ratios(np.array(x), ell)[ell]
    assert 0 < rho <= x / (2 * ell + 3) * (1 + 1e-12)
    assert sigma >= (2 * ell + 1) / x * (1 - 1e-12)
