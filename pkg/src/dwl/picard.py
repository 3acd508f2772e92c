"""Fixed-point solver built on the Green's-function integral map.

For the canonical problem (c rescaled to 1 is not required here, but the
Dirichlet data must be homogeneous) the solution satisfies

    u(x,t) = omega_v(x,t) + int_a^t int_0^1 w(x,xi,t-tau) f(..) dxi dtau,

where omega_v collects the initial-data, boundary and history terms.  On
[0,1] the Green's function has the sine expansion
w(x,xi,s) = 2 * sum_k g_k(s) sin(k pi x) sin(k pi xi), so the map acts
diagonally on sine coefficients:

    (T u)_k(t) = omega_k(t) + int_a^t g_k(t-tau) F_k(tau) dtau,

with F_k the sine coefficients of the forcing along the candidate.  The
solver marches segments [a_j, a_{j+1}] whose length follows the step rule
min{T-a, rho/M, c rho/M, eps rho/M, sqrt(2 rho/M)}, contracts in the
e^{-lambda t}-weighted four-term sup norm, and concatenates segments
until the horizon (or reports a stall).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import GridFunction, ProblemSpec, homogenize_boundaries
from .fdsolver import _vectorized_forcing, diagnostic_derivatives
from .kernels import ThetaSeries

_SAFETY = 1.2  # applied to sampled estimates of M and mu


class TubeViolation(ValueError):
    """A candidate left the iteration tube; reports component and location."""


class PicardStall(RuntimeError):
    """Segment length collapsed below the grid step before the horizon."""

    def __init__(self, reached: float, reports):
        super().__init__(f"continuation stalled at t={reached:.6g}")
        self.reached = reached
        self.reports = reports


class PicardNoConvergence(RuntimeError):
    """Fixed-point iteration exceeded max_iter on a segment."""


@dataclass(frozen=True)
class PicardConfig:
    rho: float = 1.0
    lambda_margin: float = 1.1
    max_iter: int = 60
    fix_tol: float = 1e-9
    lipschitz_mu: float | str = "estimate"
    nx: int = 101
    dt: float = 5e-3
    n_modes: int = 64

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.lambda_margin <= 1.0:
            raise ValueError("lambda_margin must exceed 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.fix_tol <= 0:
            raise ValueError("fix_tol must be positive")


@dataclass
class SegmentReport:
    a: float
    b: float
    M: float
    mu: float
    lam: float
    iterations: int
    final_residual: float
    contraction_ratios: list = field(default_factory=list)

    def __post_init__(self):
        if self.b <= self.a:
            raise ValueError("segment must have b > a")


@dataclass(frozen=True)
class TubeGrids:
    """A candidate (or iterate) with all four component grids."""

    x: np.ndarray
    times: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    uxx: np.ndarray
    ut: np.ndarray


# ---------------------------------------------------------------------------
# scalar rules
# ---------------------------------------------------------------------------

def step_interval(a: float, T: float, M: float, rho: float, c: float,
                  epsilon: float) -> float:
    """Right endpoint b of the next segment."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if M == 0.0:
        return T
    return a + min(T - a, rho / M, c * rho / M, epsilon * rho / M,
                   math.sqrt(2.0 * rho / M))


def lambda_choice(mu: float, c: float, epsilon: float, margin: float) -> float:
    """Contraction weight lambda = margin * max{1, mu(2 + 1/c + (1+2c^2)/eps)}."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if margin <= 1.0:
        raise ValueError("margin must exceed 1")
    return margin * max(1.0, mu * (2.0 + 1.0 / c + (1.0 + 2.0 * c * c) / epsilon))


def contraction_factor(mu: float, lam: float, c: float, epsilon: float) -> float:
    """Theoretical bound mu/lambda * [1/lambda + 1/c + 1 + 1/eps + 2c^2/(eps lambda)]."""
    return mu / lam * (1.0 / lam + 1.0 / c + 1.0 + 1.0 / epsilon
                       + 2.0 * c * c / (epsilon * lam))


def weighted_norm(grids, lam: float) -> float:
    """Four-term sup of e^{-lambda t}-weighted |u|, |u_x|, |u_t|, |u_xx|."""
    if isinstance(grids, GridFunction):
        if grids.ut is None:
            raise ValueError("GridFunction needs u_t samples")
        ux = np.empty_like(grids.values)
        uxx = np.empty_like(grids.values)
        for j in range(grids.nt):
            ux[:, j], uxx[:, j] = diagnostic_derivatives(grids.values[:, j], grids.dx)
        grids = TubeGrids(grids.x, grids.times, grids.values, ux, uxx, grids.ut)
    wts = np.exp(-lam * grids.times)[None, :]
    return (float(np.max(np.abs(grids.u) * wts))
            + float(np.max(np.abs(grids.ux) * wts))
            + float(np.max(np.abs(grids.ut) * wts))
            + float(np.max(np.abs(grids.uxx) * wts)))


# ---------------------------------------------------------------------------
# modal engine
# ---------------------------------------------------------------------------

class _ModalEngine:
    """Sine-space representation of the integral map on a fixed grid."""

    def __init__(self, spec: ProblemSpec, nx: int, dt: float, n_modes: int,
                 nt_total: int):
        self.spec = spec
        self.nx = nx
        self.dt = dt
        self.n_modes = n_modes
        self.x = np.linspace(0.0, 1.0, nx)
        self.k = np.arange(1, n_modes + 1)
        self.kpi = self.k * np.pi
        self.S = np.sin(np.outer(self.kpi, self.x))          # (K, nx)
        self.f = _vectorized_forcing(spec.forcing)
        ts = ThetaSeries(spec.epsilon, spec.c, n_modes)
        lags = dt * np.arange(nt_total)
        self.G = ts.g_table(lags)                            # g_k(m dt)
        self.Gp = ts.gp_table(lags)
        self.stiff = (spec.c * self.kpi) ** 2                # a_k
        self.damp = spec.epsilon * self.kpi ** 2             # b_k
        u0, _, _ = spec.u0_samples(nx)
        u1 = np.array([spec.u1(xi) for xi in self.x])
        self.a0 = self.coeffs(u0)
        self.a1 = self.coeffs(u1)

    def coeffs(self, vals: np.ndarray) -> np.ndarray:
        """Sine coefficients 2*int v sin(k pi x) dx by trapezoid."""
        w = np.full(self.nx, self.x[1] - self.x[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return 2.0 * (self.S * w) @ vals

    def reconstruct(self, Y: np.ndarray, Yp: np.ndarray,
                    times: np.ndarray) -> TubeGrids:
        """Grids of u and its derivatives from modal trajectories (K, nt)."""
        u = self.S.T @ Y
        ux = np.cos(np.outer(self.x, self.kpi)) @ (self.kpi[:, None] * Y)
        uxx = -self.S.T @ (self.kpi[:, None] ** 2 * Y)
        ut = self.S.T @ Yp
        return TubeGrids(self.x, times, u, ux, uxx, ut)

    def modal_forcing(self, grids: TubeGrids) -> np.ndarray:
        """F_k(t) along a candidate, shape (K, nt)."""
        vals = self.f(self.x[:, None], grids.times[None, :], grids.u,
                      grids.ux, grids.uxx, grids.ut)
        vals = np.broadcast_to(np.asarray(vals, dtype=float),
                               (self.nx, len(grids.times)))
        return self.coeffs(vals)

    def convolve(self, table: np.ndarray, F: np.ndarray, j_off: int = 0) -> np.ndarray:
        """Trapezoid convolution I_k(t_j) = int g_k(t_j - tau) F_k(tau) dtau.

        F covers grid indices j_off .. j_off + F.shape[1] - 1; the result
        covers the same indices, integrating from t_{j_off}.
        """
        K, n = F.shape
        out = np.zeros((K, n))
        for j in range(1, n):
            seg = table[:, :j + 1][:, ::-1] * F[:, :j + 1]
            out[:, j] = self.dt * (np.sum(seg, axis=1)
                                   - 0.5 * (seg[:, 0] + seg[:, -1]))
        return out

    def history_integral(self, table: np.ndarray, F_hist: np.ndarray,
                         j_a: int, j_span: int) -> np.ndarray:
        """int_0^{a} g_k(t_j - tau) F_hist(tau) dtau for j = j_a .. j_a+j_span."""
        K = table.shape[0]
        out = np.zeros((K, j_span + 1))
        if j_a == 0:
            return out
        wts = np.full(j_a + 1, self.dt)
        wts[0] *= 0.5
        wts[-1] *= 0.5
        for j in range(j_span + 1):
            # g_k evaluated at lags (t_{j_a+j} - tau_l) for l = 0..j_a
            gj = table[:, j + j_a::-1][:, :j_a + 1]
            out[:, j] = np.sum(gj * (F_hist * wts), axis=1)
        return out

    def omega_modal(self, j_a: int, j_span: int,
                    F_hist: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
        """(omega_k, omega'_k) on grid indices j_a .. j_a + j_span."""
        idx = np.arange(j_a, j_a + j_span + 1)
        g = self.G[:, idx]
        gp = self.Gp[:, idx]
        # homogeneous-response rows: y(0)=1,y'(0)=0 evolves as g' + b*g
        om = self.a0[:, None] * (gp + self.damp[:, None] * g) \
            + self.a1[:, None] * g
        omp = self.a0[:, None] * (-self.stiff[:, None] * g) \
            + self.a1[:, None] * gp
        if F_hist is not None and j_a > 0:
            om += self.history_integral(self.G, F_hist, j_a, j_span)
            omp += self.history_integral(self.Gp, F_hist, j_a, j_span)
        return om, omp


# ---------------------------------------------------------------------------
# public integral-map operations
# ---------------------------------------------------------------------------

def _require_canonical_boundaries(spec: ProblemSpec):
    for t in (0.0, 0.3, 0.9):
        if spec.h1(t) != 0.0 or spec.h2(t) != 0.0:
            raise ValueError("homogenize_boundaries before using the integral map")


def _grids_from_gridfunction(gf: GridFunction) -> TubeGrids:
    if gf.ut is None:
        raise ValueError("candidate needs u_t samples")
    ux = np.empty_like(gf.values)
    uxx = np.empty_like(gf.values)
    for j in range(gf.nt):
        ux[:, j], uxx[:, j] = diagnostic_derivatives(gf.values[:, j], gf.dx)
    return TubeGrids(gf.x, gf.times, gf.values, ux, uxx, gf.ut)


def omega_v(spec: ProblemSpec, v_segment: GridFunction | None, x, t):
    """The forcing-independent part of the integral map at (x, t).

    ``v_segment`` is the already-constructed solution on [0, a] (or None
    when a = 0); its forcing history enters through the history integral.
    """
    _require_canonical_boundaries(spec)
    if v_segment is None:
        dt = min(2e-3, max(float(np.max(np.atleast_1d(t))), 2e-3) / 100)
        eng = _ModalEngine(spec, 201, dt,
                           64, int(math.ceil(float(np.max(np.atleast_1d(t))) / dt)) + 2)
        j_a, F_hist = 0, None
    else:
        dt = v_segment.dt
        j_a = v_segment.nt - 1
        tmax = float(np.max(np.atleast_1d(t)))
        nt_total = j_a + int(math.ceil(max(0.0, tmax - v_segment.times[-1]) / dt)) + 2
        eng = _ModalEngine(spec, v_segment.nx, dt, 64, nt_total)
        F_hist = eng.modal_forcing(_grids_from_gridfunction(v_segment))
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t_arr)
    a_time = 0.0 if v_segment is None else v_segment.times[-1]
    for i, ti in enumerate(t_arr):
        if ti < a_time - 1e-12:
            raise ValueError("omega_v is defined for t >= a")
        # snap to the engine grid; interpolate linearly between neighbors
        fj = (ti - 0.0) / eng.dt
        j0 = min(int(fj), eng.G.shape[1] - 2)
        frac = fj - j0
        om0, _ = eng.omega_modal(max(j0, j_a), 0, F_hist)
        om1, _ = eng.omega_modal(max(j0, j_a) + 1, 0, F_hist)
        sk = np.sin(eng.kpi * x)
        out[i] = (1 - frac) * float(sk @ om0[:, 0]) + frac * float(sk @ om1[:, 0])
    return out if np.ndim(t) else float(out[0])


def apply_T(spec: ProblemSpec, v_segment: GridFunction | None,
            u_candidate: GridFunction, rho: float | None = None,
            n_modes: int = 64) -> TubeGrids:
    """One application of the integral map to a candidate on [a, b].

    When ``rho`` is given, the candidate is first checked to lie in the
    tube of radius rho around the map's data part omega_v (componentwise);
    a violation reports the offending component and location.
    """
    _require_canonical_boundaries(spec)
    dt = u_candidate.dt
    j_a = 0 if v_segment is None else v_segment.nt - 1
    if v_segment is not None:
        if abs(v_segment.dt - dt) > 1e-12 or v_segment.nx != u_candidate.nx:
            raise ValueError("history and candidate must share the grid")
    j_span = u_candidate.nt - 1
    eng = _ModalEngine(spec, u_candidate.nx, dt, n_modes, j_a + j_span + 1)
    F_hist = None if v_segment is None \
        else eng.modal_forcing(_grids_from_gridfunction(v_segment))
    om, omp = eng.omega_modal(j_a, j_span, F_hist)
    times = u_candidate.times
    cand = _grids_from_gridfunction(u_candidate)
    if rho is not None:
        center = eng.reconstruct(om, omp, times)
        for name in ("u", "ux", "uxx", "ut"):
            dev = np.abs(getattr(cand, name) - getattr(center, name))
            if np.max(dev) > rho:
                i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
                raise TubeViolation(
                    f"component {name} leaves the tube at x={eng.x[i]:.4g}, "
                    f"t={times[j]:.4g} (deviation {dev[i, j]:.3e} > rho={rho})")
    F = eng.modal_forcing(cand)
    Y = om + eng.convolve(eng.G, F)
    Yp = omp + eng.convolve(eng.Gp, F)
    return eng.reconstruct(Y, Yp, times)


# ---------------------------------------------------------------------------
# tube sampling estimates
# ---------------------------------------------------------------------------

def _estimate_M(eng: _ModalEngine, center: TubeGrids, rho: float,
                rng: np.random.Generator) -> float:
    """Conservative sup of |f| over the tube: corner + uniform sampling."""
    best = 0.0
    shape = center.u.shape
    xg = eng.x[:, None]
    tg = center.times[None, :]
    draws = [(np.zeros(shape),) * 4]
    for _ in range(6):
        draws.append(tuple(rho * rng.choice([-1.0, 1.0], size=shape)
                           for _ in range(4)))
    for _ in range(4):
        draws.append(tuple(rng.uniform(-rho, rho, size=shape)
                           for _ in range(4)))
    for du, dux, duxx, dut in draws:
        vals = eng.f(xg, tg, center.u + du, center.ux + dux,
                     center.uxx + duxx, center.ut + dut)
        best = max(best, float(np.max(np.abs(vals))))
    return _SAFETY * best


def _estimate_mu(eng: _ModalEngine, center: TubeGrids, rho: float,
                 rng: np.random.Generator) -> float:
    """Lipschitz constant of f in (u, u_x, u_xx, u_t) by difference quotients."""
    best = 0.0
    shape = center.u.shape
    xg = eng.x[:, None]
    tg = center.times[None, :]
    for _ in range(8):
        p1 = tuple(rng.uniform(-rho, rho, size=shape) for _ in range(4))
        p2 = tuple(rng.uniform(-rho, rho, size=shape) for _ in range(4))
        f1 = eng.f(xg, tg, center.u + p1[0], center.ux + p1[1],
                   center.uxx + p1[2], center.ut + p1[3])
        f2 = eng.f(xg, tg, center.u + p2[0], center.ux + p2[1],
                   center.uxx + p2[2], center.ut + p2[3])
        denom = sum(np.abs(a - b) for a, b in zip(p1, p2))
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.abs(np.asarray(f1, dtype=float) - f2) / denom
        q = q[np.isfinite(q)]
        if q.size:
            best = max(best, float(np.max(q)))
    return _SAFETY * best


# ---------------------------------------------------------------------------
# the continuation driver
# ---------------------------------------------------------------------------

def solve_picard(spec: ProblemSpec, config: PicardConfig,
                 horizon: float | None = None,
                 ) -> tuple[GridFunction, list[SegmentReport]]:
    """Construct the solution by contraction segments up to ``horizon``.

    Returns the concatenated solution grid (u with u_t) and one report
    per segment.  Raises PicardStall when the step rule collapses below
    the grid resolution, PicardNoConvergence when a segment exceeds
    max_iter.
    """
    lifted = None
    work = spec
    if not all(spec.h1(t) == 0.0 and spec.h2(t) == 0.0 for t in (0.0, 0.3, 0.9)):
        if spec.c != 1.0:
            raise ValueError("rescale_unit_wavespeed before solve_picard "
                             "for boundary-lifted problems")
        work = homogenize_boundaries(spec)
        lifted = spec
    if horizon is None:
        if not math.isfinite(spec.T):
            raise ValueError("horizon required for unbounded specs")
        horizon = spec.T
    horizon = min(horizon, spec.T)
    dt = config.dt
    nt_total = int(round(horizon / dt)) + 1
    eng = _ModalEngine(work, config.nx, dt, config.n_modes, nt_total)
    rng = np.random.default_rng(20260826)

    reports: list[SegmentReport] = []
    F_hist = np.zeros((config.n_modes, 1))
    u_cols = [eng.S.T @ eng.a0]
    ut_cols = [eng.S.T @ eng.a1]
    j_a = 0
    while j_a < nt_total - 1:
        a = j_a * dt
        # lookahead window for the sup estimate (capped at 1 time unit)
        j_peek = min(nt_total - 1, j_a + max(1, int(round(1.0 / dt))))
        om, omp = eng.omega_modal(j_a, j_peek - j_a,
                                  F_hist if j_a > 0 else None)
        peek_times = dt * np.arange(j_a, j_peek + 1)
        center = eng.reconstruct(om, omp, peek_times)
        M = _estimate_M(eng, center, config.rho, rng)
        b = step_interval(a, horizon, M, config.rho, work.c, work.epsilon)
        j_b = min(nt_total - 1, j_a + int(math.floor((b - a) / dt + 1e-9)))
        if j_b <= j_a:
            raise PicardStall(a, reports)
        j_b = min(j_b, j_peek)  # M was estimated on the peek window only
        j_span = j_b - j_a
        times = dt * np.arange(j_a, j_b + 1)
        om, omp = om[:, :j_span + 1], omp[:, :j_span + 1]
        center = eng.reconstruct(om, omp, times)
        if config.lipschitz_mu == "estimate":
            mu = _estimate_mu(eng, center, config.rho, rng)
        else:
            mu = float(config.lipschitz_mu)
        lam = lambda_choice(mu, work.c, work.epsilon, config.lambda_margin)

        Y, Yp = om.copy(), omp.copy()
        grids = center
        prev_diff = None
        ratios = []
        residual = math.inf
        iterations = 0
        for it in range(config.max_iter):
            F = eng.modal_forcing(grids)
            Y_new = om + eng.convolve(eng.G, F)
            Yp_new = omp + eng.convolve(eng.Gp, F)
            new_grids = eng.reconstruct(Y_new, Yp_new, times)
            diff = TubeGrids(grids.x, times, new_grids.u - grids.u,
                             new_grids.ux - grids.ux,
                             new_grids.uxx - grids.uxx,
                             new_grids.ut - grids.ut)
            residual = weighted_norm(diff, lam)
            if prev_diff is not None and prev_diff > 0:
                ratios.append(residual / prev_diff)
            prev_diff = residual
            Y, Yp, grids = Y_new, Yp_new, new_grids
            iterations = it + 1
            if residual < config.fix_tol:
                break
        else:
            raise PicardNoConvergence(
                f"segment [{a:.4g},{times[-1]:.4g}] did not converge in "
                f"{config.max_iter} iterations (residual {residual:.3e})")
        reports.append(SegmentReport(a=a, b=float(times[-1]), M=M, mu=mu,
                                     lam=lam, iterations=iterations,
                                     final_residual=residual,
                                     contraction_ratios=ratios))
        # commit the segment and extend the forcing history
        F = eng.modal_forcing(grids)
        if j_a == 0:
            F_hist = F
        else:
            F_hist = np.concatenate([F_hist, F[:, 1:]], axis=1)
        for j in range(1, j_span + 1):
            u_cols.append(grids.u[:, j])
            ut_cols.append(grids.ut[:, j])
        j_a = j_b

    gf = _assemble(eng, u_cols, ut_cols, dt)
    if lifted is not None:
        p = np.empty_like(gf.values)
        pt = np.empty_like(gf.values)
        for j, t in enumerate(gf.times):
            p[:, j] = (1 - gf.x) * lifted.h1(t) + gf.x * lifted.h2(t)
            pt[:, j] = (1 - gf.x) * lifted._h1_t(t) + gf.x * lifted._h2_t(t)
        gf = GridFunction(gf.nx, gf.dt, gf.values + p, ut=gf.ut + pt)
    return gf, reports


def _assemble(eng: _ModalEngine, u_cols, ut_cols, dt) -> GridFunction:
    u = np.stack(u_cols, axis=1)
    ut = np.stack(ut_cols, axis=1)
    return GridFunction(nx=eng.nx, dt=dt, values=u, ut=ut)
