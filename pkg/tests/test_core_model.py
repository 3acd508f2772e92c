import math

import numpy as np
import pytest

from dwl.core_model import (GridFunction, ProblemSpec, StatePair,
                            homogenize_boundaries, perturbation_spec,
                            read_grid_csv, rescale_unit_wavespeed,
                            residual_grid, write_grid_csv)
from dwl.fdsolver import FDConfig, solve_fd


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _canonical(forcing=None, u0=None, u1=None, **kw):
    return ProblemSpec(
        epsilon=kw.pop("epsilon", 1.0), c=kw.pop("c", 1.0),
        forcing=forcing or (lambda x, t, u, ux, uxx, ut: _zero(x)),
        u0=u0 or (lambda x: np.sin(np.pi * np.asarray(x, float))),
        u1=u1 or _zero, T=kw.pop("T", math.inf), **kw)


def test_consistency_check_rejects_mismatched_corners():
    with pytest.raises(ValueError):
        ProblemSpec(epsilon=1.0, c=1.0,
                    forcing=lambda x, t, u, ux, uxx, ut: _zero(x),
                    u0=lambda x: np.asarray(x, float) + 1.0,  # u0(0) = 1
                    u1=_zero, T=1.0)


def test_rescale_preserves_solutions():
    # solve the c=2 problem directly and via the canonical rescaling
    c = 2.0
    spec = _canonical(c=c, epsilon=0.5,
                      forcing=lambda x, t, u, ux, uxx, ut: -u - 0.3 * ut)
    horizon = 0.5
    gf = solve_fd(spec, FDConfig(nx=201, dt=1e-4), horizon)

    rs = rescale_unit_wavespeed(spec)
    assert rs.c == 1.0
    assert rs.epsilon == pytest.approx(spec.epsilon / c)
    gf2 = solve_fd(rs, FDConfig(nx=201, dt=1e-4 * c), horizon * c)
    # u'(x, c t) = u(x, t)
    assert gf2.nt == gf.nt
    err = np.max(np.abs(gf2.values - gf.values))
    assert err < 2e-4


def test_rescaled_solution_satisfies_rescaled_pde():
    spec = _canonical(c=2.0, epsilon=0.5,
                      forcing=lambda x, t, u, ux, uxx, ut: np.sin(np.pi * x) - u)
    rs = rescale_unit_wavespeed(spec)
    gf = solve_fd(rs, FDConfig(nx=401, dt=5e-5), 0.2)
    res = residual_grid(rs, gf)
    assert np.max(np.abs(res)) < 5e-3


def test_homogenize_boundaries_roundtrip():
    h1 = lambda t: 0.2 * (1.0 - math.cos(t))
    h2 = lambda t: 0.1 * (1.0 - math.cos(t))
    spec = ProblemSpec(epsilon=1.0, c=1.0,
                       forcing=lambda x, t, u, ux, uxx, ut: -u,
                       u0=lambda x: np.sin(np.pi * np.asarray(x, float)),
                       u1=_zero, h1=h1, h2=h2, T=math.inf)
    hom = homogenize_boundaries(spec)
    assert hom.h1(0.4) == 0.0 and hom.h2(0.4) == 0.0
    horizon = 0.5
    gf = solve_fd(spec, FDConfig(nx=201, dt=1e-4), horizon)
    gv = solve_fd(hom, FDConfig(nx=201, dt=1e-4), horizon)
    x = gf.x[:, None]
    t = gf.times[None, :]
    lift = ((1.0 - x) * np.vectorize(h1)(t) + x * np.vectorize(h2)(t))
    assert np.max(np.abs(gf.values - (gv.values + lift))) < 2e-4


def test_grid_csv_roundtrip(tmp_path):
    spec = _canonical()
    gf = solve_fd(spec, FDConfig(nx=51, dt=1e-3), 0.1)
    path = tmp_path / "run.csv"
    write_grid_csv(gf, path)
    back = read_grid_csv(path)
    assert back.nx == gf.nx and back.nt == gf.nt
    assert np.allclose(back.values, gf.values, atol=1e-12)
    assert np.allclose(back.ut, gf.ut, atol=1e-12)


def test_state_pair_rejects_inhomogeneous_boundaries():
    x = np.linspace(0.0, 1.0, 21)
    with pytest.raises(ValueError):
        StatePair(x=x, phi=np.ones_like(x), phi_x=_zero(x),
                  phi_xx=_zero(x), psi=_zero(x))


def test_state_pair_from_grid_derivatives():
    spec = _canonical()
    gf = solve_fd(spec, FDConfig(nx=401, dt=1e-3), 0.05)
    st = StatePair.from_grid(gf, 0)
    x = gf.x
    assert np.max(np.abs(st.phi_x - np.pi * np.cos(np.pi * x))) < 1e-4
    assert np.max(np.abs(st.phi_xx + np.pi ** 2 * np.sin(np.pi * x))) < 1e-3


def test_perturbation_spec_zero_difference():
    # perturbing around an exact trajectory gives the null problem
    spec = _canonical(forcing=lambda x, t, u, ux, uxx, ut: u)
    # u = e^{-t} sin(pi x) solves the eps=c=1 problem with f=u
    gf = solve_fd(spec, FDConfig(nx=201, dt=1e-4), 0.3)
    pert = perturbation_spec(spec, gf)
    assert pert.c == 1.0
    x = np.linspace(0, 1, 51)
    assert np.max(np.abs(pert.u0(x))) < 1e-12
    gd = solve_fd(pert, FDConfig(nx=201, dt=1e-3), 0.3)
    assert np.max(np.abs(gd.values)) < 1e-6


def test_perturbation_spec_rejects_non_solution():
    spec = _canonical(forcing=lambda x, t, u, ux, uxx, ut: u)
    gf = solve_fd(spec, FDConfig(nx=201, dt=1e-4), 0.3)
    bad = GridFunction(nx=gf.nx, dt=gf.dt, values=gf.values + 1.0,
                       ut=gf.ut, t0=gf.t0)
    with pytest.raises(ValueError):
        perturbation_spec(spec, bad)
