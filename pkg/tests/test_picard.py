import math

import numpy as np
import pytest

from dwl.core_model import ProblemSpec
from dwl.fdsolver import FDConfig, solve_fd
from dwl.kernels import ThetaSeries
from dwl.picard import (PicardConfig, contraction_factor, lambda_choice,
                        solve_picard, step_interval, weighted_norm)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _spec(forcing, u0_amp=0.1, epsilon=1.0):
    return ProblemSpec(
        epsilon=epsilon, c=1.0, forcing=forcing,
        u0=lambda x: u0_amp * np.sin(np.pi * np.asarray(x, float)),
        u1=_zero, T=math.inf)


def test_homogeneous_problem_matches_modal_solution():
    spec = _spec(lambda x, t, u, ux, uxx, ut: _zero(x))
    gf, reports = solve_picard(spec, PicardConfig(nx=101, dt=5e-3), 0.5)
    ts = ThetaSeries(1.0, 1.0, n_modes=8)
    # exact solution: 0.1 * (g_1'(t) + eps pi^2 g_1(t)) sin(pi x)
    g = ts.g_table(gf.times)[0]
    gp = ts.gp_table(gf.times)[0]
    exact = 0.1 * (gp + np.pi ** 2 * g)[None, :] * np.sin(np.pi * gf.x)[:, None]
    assert np.max(np.abs(gf.values - exact)) < 1e-12
    assert all(r.final_residual <= 1e-9 for r in reports)


def test_step_interval_formula():
    # b - a = min{T - a, rho/M, c rho/M, eps rho/M, sqrt(2 rho/M)}
    assert step_interval(0.0, 10.0, M=4.0, rho=1.0, c=1.0,
                         epsilon=0.5) == pytest.approx(0.125)
    assert step_interval(9.9, 10.0, M=0.01, rho=1.0, c=1.0,
                         epsilon=1.0) == pytest.approx(10.0)


def test_lambda_choice_and_contraction():
    lam = lambda_choice(mu=2.0, c=1.0, epsilon=1.0, margin=1.1)
    assert lam >= 2.0 * (2.0 + 1.0 + 3.0)  # mu*(2 + 1/c + (1+2c^2)/eps)
    q = contraction_factor(mu=2.0, lam=lam, c=1.0, epsilon=1.0)
    assert 0.0 < q < 1.0


def test_picard_matches_fd_on_damped_sine_gordon():
    forcing = lambda x, t, u, ux, uxx, ut: -np.sin(u) - 0.5 * ut
    spec = _spec(forcing)
    gf, reports = solve_picard(spec, PicardConfig(nx=101, dt=5e-3), 1.0)
    fd = solve_fd(spec, FDConfig(nx=101, dt=2.5e-4,
                                 store_every=20), 1.0)
    assert fd.nt == gf.nt
    assert np.max(np.abs(fd.values - gf.values)) < 1e-3
    for r in reports:
        assert r.iterations >= 1
        assert all(q < 1.0 for q in r.contraction_ratios[1:])


def test_weighted_norm_scaling():
    spec = _spec(lambda x, t, u, ux, uxx, ut: _zero(x))
    gf, _ = solve_picard(spec, PicardConfig(nx=51, dt=1e-2), 0.2)
    n1 = weighted_norm(gf, lam=0.0)
    n2 = weighted_norm(gf, lam=5.0)
    assert n2 < n1  # e^{-lambda t} weighting can only shrink the sup


def test_nonzero_boundary_requires_canonical_speed():
    spec = ProblemSpec(
        epsilon=1.0, c=2.0,
        forcing=lambda x, t, u, ux, uxx, ut: _zero(x),
        u0=_zero, u1=_zero,
        h1=lambda t: 0.1 * (1 - math.cos(t)), h2=lambda t: 0.0, T=math.inf)
    with pytest.raises(ValueError):
        solve_picard(spec, PicardConfig(nx=51, dt=1e-2), 0.2)


def test_boundary_lift_matches_fd():
    h1 = lambda t: 0.05 * (1.0 - np.cos(t))
    spec = ProblemSpec(
        epsilon=1.0, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: -0.5 * ut,
        u0=_zero, u1=_zero, h1=h1, h2=lambda t: 0.0, T=math.inf)
    gf, _ = solve_picard(spec, PicardConfig(nx=101, dt=5e-3), 0.5)
    fd = solve_fd(spec, FDConfig(nx=101, dt=2.5e-4, store_every=20), 0.5)
    assert np.max(np.abs(fd.values - gf.values)) < 1e-3
    assert np.max(np.abs(gf.values[0, :] -
                         np.vectorize(h1)(gf.times))) < 1e-10
