import math

import numpy as np
import pytest
from scipy.special import i0 as scipy_i0

from dwl.kernels import (KernelParams, ThetaSeries, bessel_i0, fundamental_k,
                         green_w, green_w_derivatives, theta,
                         verify_kernel_bounds)

PARAMS = KernelParams(epsilon=1.0, c=1.0)


def test_bessel_i0_against_scipy():
    for z in (0.0, 0.3, 1.0, 5.0, 20.0, 120.0, 600.0):
        assert bessel_i0(z) == pytest.approx(float(scipy_i0(z)), rel=1e-12)


def test_bessel_i0_overflow():
    with pytest.raises(OverflowError):
        bessel_i0(800.0)


def test_fundamental_k_boundary_values():
    assert fundamental_k(0.3, 0.0, PARAMS).value == 0.0
    assert fundamental_k(0.0, 0.5, PARAMS).value == 0.0


def test_theta_series_matches_quadrature():
    ts = ThetaSeries(1.0, 1.0, n_modes=256)
    for x, s in [(0.3, 0.4), (0.5, 0.5), (0.7, 1.2), (0.1, 0.2)]:
        ev = theta(x, s, PARAMS)
        assert ts.theta(x, s) == pytest.approx(ev.value,
                                               abs=max(1e-10, 10 * ev.est_error))


def test_theta_symmetries():
    ts = ThetaSeries(1.0, 1.0, n_modes=128)
    # even and 2-periodic at exactly representable arguments
    for x, s in [(0.25, 0.3), (0.5, 0.8)]:
        assert ts.theta(-x, s) == ts.theta(x, s)
        assert ts.theta(x + 2.0, s) == pytest.approx(ts.theta(x, s), abs=1e-14)


def test_green_w_antisymmetric_in_images():
    ts = ThetaSeries(1.0, 1.0, n_modes=128)
    x, xi, s = 0.4, 0.7, 0.6
    assert ts.w(x, xi, s) == pytest.approx(
        ts.theta(x - xi, s) - ts.theta(x + xi, s), abs=1e-13)
    ev = green_w(x, xi, s, PARAMS)
    assert ts.w(x, xi, s) == pytest.approx(ev.value, abs=10 * ev.est_error + 1e-10)
    # w vanishes at the boundary images
    assert abs(ts.w(0.0, xi, s)) < 1e-13
    assert abs(ts.w(1.0, xi, s)) < 1e-12


def test_derivatives_series_vs_quadrature_richardson():
    for which in ("t", "x"):
        sv = green_w_derivatives(0.35, 0.6, 0.5, PARAMS, which,
                                 evaluator="series")
        qv = green_w_derivatives(0.35, 0.6, 0.5, PARAMS, which,
                                 evaluator="quadrature")
        assert sv.value == pytest.approx(qv.value,
                                         abs=max(1e-6, 10 * qv.est_error))


def test_w_x_chain_rule_cross_check():
    ts = ThetaSeries(1.0, 1.0, n_modes=256)
    x, xi, s = 0.45, 0.3, 0.7
    h = 1e-5
    dxi = (ts.w(x, xi + h, s) - ts.w(x, xi - h, s)) / (2 * h)
    expected = -ts.theta_x(x - xi, s) - ts.theta_x(x + xi, s)
    assert dxi == pytest.approx(expected, abs=1e-6)


def test_theta_pde_residual():
    # L theta = -eps*theta_xxt - c^2 theta_xx + theta_tt = 0 away from x=0
    ts = ThetaSeries(1.0, 1.0, n_modes=512)
    h = 1e-3
    for x, s in [(0.4, 0.6), (0.6, 0.9), (0.3, 1.4)]:
        th_tt = (ts.theta(x, s + h) - 2 * ts.theta(x, s)
                 + ts.theta(x, s - h)) / h ** 2
        th_xx = ts.theta_xx(x, s)
        th_xxt = (ts.theta_xx(x, s + h) - ts.theta_xx(x, s - h)) / (2 * h)
        residual = -1.0 * th_xxt - 1.0 * th_xx + th_tt
        assert abs(residual) < 1e-3


def test_singular_mass_value():
    ts = ThetaSeries(1.0, 1.0, n_modes=64)
    s = 0.8
    assert ts.singular_mass(s) == pytest.approx(math.exp(-s), rel=1e-12)


def test_kernel_bounds_midpoint():
    rep = verify_kernel_bounds(0.5, 0.5, PARAMS)
    assert rep.passed()
    for name in ("w", "w_x", "w_t", "w_xx", "heat"):
        assert rep.margins[name] > -10 * rep.est_error


def test_kernel_bounds_small_and_large_s():
    for s in (0.05, 2.0):
        rep = verify_kernel_bounds(0.35, s, PARAMS)
        assert rep.passed()


def test_theta_series_rejects_bad_params():
    with pytest.raises(ValueError):
        ThetaSeries(-1.0, 1.0)
    with pytest.raises(ValueError):
        ThetaSeries(1.0, 1.0, n_modes=2)
