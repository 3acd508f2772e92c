import math

import numpy as np
import pytest

from dwl.core_model import ProblemSpec
from dwl.fdsolver import (FDConfig, InstabilityError, ManufacturedSolution,
                          convergence_study, manufactured_forcing, solve_fd,
                          spec_from_manufactured)


def _decaying_mode():
    return ManufacturedSolution(
        u=lambda x, t: np.exp(-t) * np.sin(np.pi * x),
        u_t=lambda x, t: -np.exp(-t) * np.sin(np.pi * x),
        u_x=lambda x, t: np.exp(-t) * np.pi * np.cos(np.pi * x),
        u_xx=lambda x, t: -np.exp(-t) * np.pi ** 2 * np.sin(np.pi * x),
        u_xxt=lambda x, t: np.exp(-t) * np.pi ** 2 * np.sin(np.pi * x),
        u_tt=lambda x, t: np.exp(-t) * np.sin(np.pi * x),
    )


def test_manufactured_forcing_is_u_for_unit_parameters():
    # for u = e^{-t} sin(pi x), eps = c = 1:  L u = u, so f = u
    ms = _decaying_mode()
    f = manufactured_forcing(ms, 1.0, 1.0)
    x = np.linspace(0, 1, 11)
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(f(x, t), ms.u(x, t), atol=1e-12)


def test_solver_tracks_manufactured_solution():
    ms = _decaying_mode()
    spec = spec_from_manufactured(ms, 1.0, 1.0)
    gf = solve_fd(spec, FDConfig(nx=201, dt=1e-4), 0.5)
    exact = ms.u(gf.x[:, None], gf.times[None, :])
    assert np.max(np.abs(gf.values - exact)) < 1e-5


def test_convergence_orders():
    study = convergence_study(_decaying_mode(), epsilon=1.0)
    assert all(o >= 1.8 for o in study["space_orders"])
    assert all(o >= 1.8 for o in study["time_orders"])


def test_explicit_scheme_matches_semi_implicit():
    spec = ProblemSpec(
        epsilon=0.02, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: -np.sin(u),
        u0=lambda x: 0.2 * np.sin(np.pi * np.asarray(x, float)),
        u1=lambda x: np.zeros_like(np.asarray(x, float)), T=math.inf)
    dt = 2e-5  # under both CFL limits: dx/c = 0.01, dx^2/(2 eps) = 2.5e-3
    gs = solve_fd(spec, FDConfig(nx=101, dt=dt, scheme="semi-implicit"), 0.2)
    ge = solve_fd(spec, FDConfig(nx=101, dt=dt, scheme="explicit"), 0.2)
    assert np.max(np.abs(gs.values - ge.values)) < 1e-6


def test_explicit_scheme_cfl_violation_raises():
    spec = ProblemSpec(
        epsilon=1.0, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: np.zeros_like(np.asarray(u, float)),
        u0=lambda x: 0.2 * np.sin(np.pi * np.asarray(x, float)),
        u1=lambda x: np.zeros_like(np.asarray(x, float)), T=math.inf)
    # dt = 1e-3 violates dt <= dx^2/(2 eps) = 5e-5 at nx=101
    with pytest.raises(ValueError):
        solve_fd(spec, FDConfig(nx=101, dt=1e-3, scheme="explicit"), 1.0)


def test_boundary_data_enforced():
    h1 = lambda t: 0.1 * (1.0 - math.cos(t))
    h2 = lambda t: 0.0
    spec = ProblemSpec(
        epsilon=1.0, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: np.zeros_like(np.asarray(u, float)),
        u0=lambda x: np.zeros_like(np.asarray(x, float)),
        u1=lambda x: np.zeros_like(np.asarray(x, float)),
        h1=h1, h2=h2, T=math.inf)
    gf = solve_fd(spec, FDConfig(nx=51, dt=1e-3), 0.5)
    expected = np.vectorize(h1)(gf.times)
    assert np.max(np.abs(gf.values[0, :] - expected)) < 1e-12
    assert np.max(np.abs(gf.values[-1, :])) < 1e-12


def test_store_every_keeps_endpoints():
    spec = ProblemSpec(
        epsilon=1.0, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: np.zeros_like(np.asarray(u, float)),
        u0=lambda x: 0.1 * np.sin(np.pi * np.asarray(x, float)),
        u1=lambda x: np.zeros_like(np.asarray(x, float)), T=math.inf)
    gf = solve_fd(spec, FDConfig(nx=51, dt=1e-3, store_every=10 ** 9), 0.2)
    assert gf.times[0] == 0.0
    assert gf.times[-1] == pytest.approx(0.2, abs=1e-12)


def test_blow_up_guard():
    spec = ProblemSpec(
        epsilon=1e-4, c=1.0,
        forcing=lambda x, t, u, ux, uxx, ut: 100.0 * u,
        u0=lambda x: 0.1 * np.sin(np.pi * np.asarray(x, float)),
        u1=lambda x: np.zeros_like(np.asarray(x, float)), T=math.inf)
    with pytest.raises(InstabilityError):
        solve_fd(spec, FDConfig(nx=51, dt=0.05), 2000.0)
