"""Scalar-ODE comparison engine.

The energy V(t) along a trajectory is dominated by solutions of

    y' = -p*y + g(t)*y + g1(t, y) + g2(t, y),          (state-dependent)
    z' = -p*z + g(t)*z + g1(t, B) + g2(t, B),          (frozen at B)

where (g, g1, g2) obey averaged smallness/growth hypotheses with
constants (sigma, chi, kappa, q, M, xi).  This module verifies those
hypotheses numerically, computes the explicit boundedness constants
(m, theta, t_theta, t_tilde, beta_tilde, s_tilde), integrates the two
ODE variants, locates the attraction time T_hat both empirically and by
the formula route max{T0, T2, T4}, and wires the result up to the
PDE-level radius beta(alpha) = sqrt(beta_tilde(alpha^2 c2^2) / c1^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .functionals import ConstantsBundle

_SCAN_STEP = 0.1
_ODE_TOL = 1e-9


def _zero2(_t, _eta):
    return 0.0


@dataclass(frozen=True)
class AveragedHypotheses:
    """The forcing-bound data (g, g1, g2) with their declared constants.

    g1 and g2 must be nondecreasing in their second argument (use
    :func:`monotone_in_eta` to enforce this for a raw bound).
    ``breakpoints`` optionally lists kink locations of g so the ODE
    integrator does not step over narrow features.
    """

    g: callable
    sigma: float
    chi: float
    kappa: float
    q: float
    M: float
    p: float
    xi: float = 0.0
    g1: callable = _zero2
    g2: callable = _zero2
    breakpoints: tuple = ()

    def __post_init__(self):
        if not (0.0 <= self.chi <= 1.0 and 0.0 <= self.kappa <= 1.0):
            raise ValueError("chi and kappa must lie in [0,1]")
        if self.q < 0 or self.M <= 0 or self.p <= 0 or self.xi < 0:
            raise ValueError("require q >= 0, M > 0, p > 0, xi >= 0")
        if self.chi == 1.0 and self.q >= self.p:
            raise ValueError("chi = 1 requires q < p")
        if self.chi <= self.kappa and self.xi != 0.0:
            raise ValueError("xi must be 0 when chi <= kappa")


def monotone_in_eta(g, n: int = 65):
    """Replace g(t, eta) by its running max over eta' in [0, eta]."""

    def gm(t, eta):
        etas = np.linspace(0.0, eta, n)
        return max(g(t, e) for e in etas)

    return gm


@dataclass
class LemmaConstants:
    m: float
    theta_v: float
    t_theta: float
    t_tilde: float
    beta_tilde: float
    s_tilde: float
    T_hat: float = math.nan

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("m must be positive")
        for name in ("theta_v", "t_theta", "t_tilde", "s_tilde"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


# ---------------------------------------------------------------------------
# hypothesis verification
# ---------------------------------------------------------------------------

def _time_grid(horizon: float, n: int, breakpoints=()) -> np.ndarray:
    t = np.linspace(0.0, horizon, n)
    bp = [b for b in breakpoints if 0.0 < b < horizon]
    if bp:
        t = np.unique(np.concatenate([t, np.asarray(bp)]))
    return t


def _cumulative_g(g, t: np.ndarray) -> np.ndarray:
    vals = np.array([g(ti) for ti in t])
    if np.any(vals < 0):
        raise ValueError("g must be nonnegative")
    return np.concatenate([[0.0], cumulative_trapezoid(vals, t)])


def verify_hyp_averaged(g, p: float, horizon: float, t0_samples: int = 4001,
                        sigma: float | None = None, breakpoints=()):
    """Sup over t >= t0 of  int_{t0}^t g - p*(t - t0).

    Returns (estimate, passed) where passed compares against the declared
    sigma (None when no sigma is given).  The sup over all (t0, t) pairs
    equals the maximal rise of phi(t) = int_0^t g - p*t above its running
    minimum, which a single sweep computes.
    """
    t = _time_grid(horizon, t0_samples, breakpoints)
    phi = _cumulative_g(g, t) - p * t
    est = float(np.max(phi - np.minimum.accumulate(phi)))
    return est, (None if sigma is None else est <= sigma)


def verify_hyp_growth(g, chi: float, kappa: float, q: float, M: float,
                      horizon: float, n_samples: int = 4001,
                      breakpoints=()) -> dict:
    """Check | int_0^t g / (1 + t^chi) - q | < M / (1 + t^kappa) on a grid."""
    t = _time_grid(horizon, n_samples, breakpoints)
    G = _cumulative_g(g, t)
    lhs = np.abs(G / (1.0 + t ** chi) - q)
    rhs = M / (1.0 + t ** kappa)
    viol = lhs - rhs
    i = int(np.argmax(viol))
    return {
        "max_violation": float(viol[i]),
        "at_t": float(t[i]),
        "passed": bool(viol[i] < 0.0),
    }


# ---------------------------------------------------------------------------
# Lemma constants
# ---------------------------------------------------------------------------

def h_function(hyp: AveragedHypotheses, theta_v: float):
    """h(tau) = p*tau - q*tau^chi - M*theta*(tau^chi - tau^kappa)."""

    def h(tau):
        tau = np.asarray(tau, dtype=float)
        return (hyp.p * tau - hyp.q * tau ** hyp.chi
                - hyp.M * theta_v * (tau ** hyp.chi - tau ** hyp.kappa))

    return h


def _scan_forward(cond, start: float, horizon: float,
                  step: float = _SCAN_STEP) -> float:
    """First time from which ``cond`` holds on the rest of the horizon.

    Forward scan with the given step, then bisection refinement between
    the last failure and the first persistent success.
    """
    ts = np.arange(start, horizon + step, step)
    ok = np.array([bool(cond(t)) for t in ts])
    if not ok[-1]:
        raise RuntimeError("condition not attained within the horizon")
    idx = len(ok) - 1
    while idx > 0 and ok[idx - 1]:
        idx -= 1
    if idx == 0:
        return float(ts[0])
    lo, hi = ts[idx - 1], ts[idx]
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if cond(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def lemma1_constants(hyp: AveragedHypotheses, alpha_tilde: float,
                     scan_horizon: float = 500.0) -> LemmaConstants:
    """Eventual-boundedness constants for the state-dependent ODE.

    beta_tilde(alpha) = alpha * (e^sigma + e^{2M}/m + e^{2M}); the onset
    time s_tilde = max{t_tilde, t_theta, s1, s2} where s1, s2 are located
    by forward scanning of the decay conditions on g1, g2.
    """
    if alpha_tilde < 0:
        raise ValueError("alpha_tilde must be >= 0")
    p, q, chi, kappa, M, xi = hyp.p, hyp.q, hyp.chi, hyp.kappa, hyp.M, hyp.xi
    if chi < 1.0:
        m = p / 2.0
    else:
        if q >= p:
            raise ValueError("chi = 1 requires q < p")
        m = (p - q) / 2.0
    if chi <= kappa:
        theta_v = 0.0
    elif chi < 1.0:
        theta_v = min(1.0, xi / (2.0 * M))
    else:
        theta_v = min(1.0, (p - q) / (2.0 * M), xi / (2.0 * M))
    t_theta = ((1.0 - theta_v) / theta_v) ** (1.0 / kappa) if theta_v > 0 else 0.0
    t_tilde = (chi * (2.0 * q + xi) / p) ** (1.0 / (1.0 - chi)) if chi < 1.0 else 0.0
    beta_tilde = alpha_tilde * (math.exp(hyp.sigma) + math.exp(2.0 * M) / m
                                + math.exp(2.0 * M))

    def weight(tau):
        return math.exp(xi * (tau ** chi - tau ** kappa))

    s1 = 0.0
    if hyp.g1 is not _zero2 and alpha_tilde > 0:
        s1 = _scan_forward(
            lambda t: hyp.g1(t, beta_tilde) * weight(t) <= alpha_tilde,
            0.0, scan_horizon)
    s2 = 0.0
    if hyp.g2 is not _zero2 and alpha_tilde > 0:
        # int_s^inf g2(tau, beta_tilde) * weight <= alpha_tilde
        ts = np.linspace(0.0, scan_horizon, 20001)
        vals = np.array([hyp.g2(t, beta_tilde) * weight(t) for t in ts])
        tail = vals[::-1]
        tail_int = np.concatenate([[0.0], cumulative_trapezoid(tail, ts)])[::-1]
        if tail_int[0] > alpha_tilde:
            idx = int(np.argmax(tail_int <= alpha_tilde))
            s2 = float(ts[idx])
    return LemmaConstants(m=m, theta_v=theta_v, t_theta=t_theta,
                          t_tilde=t_tilde, beta_tilde=beta_tilde,
                          s_tilde=max(t_tilde, t_theta, s1, s2))


# ---------------------------------------------------------------------------
# trajectory integration
# ---------------------------------------------------------------------------

def solve_comparison_ode(hyp: AveragedHypotheses, y0: float, t0: float,
                         horizon: float, variant: str = "state-dependent",
                         frozen_beta: float | None = None,
                         n_out: int = 2001):
    """Integrate one of the two comparison ODEs; returns (t, y).

    variant 'state-dependent' solves y' = -p y + g y + g1(t,y) + g2(t,y);
    variant 'frozen' fixes the second argument of g1, g2 at frozen_beta.
    Solutions of both stay nonnegative for y0 >= 0; a floor at 0 only
    guards rounding.
    """
    if y0 < 0:
        raise ValueError("y0 must be >= 0")
    if variant not in ("state-dependent", "frozen"):
        raise ValueError("variant must be 'state-dependent' or 'frozen'")
    if variant == "frozen" and frozen_beta is None:
        raise ValueError("frozen variant needs frozen_beta")

    def rhs(t, y):
        yy = max(y[0], 0.0)
        eta = frozen_beta if variant == "frozen" else yy
        return [-hyp.p * yy + hyp.g(t) * yy + hyp.g1(t, eta) + hyp.g2(t, eta)]

    # integrate kink-to-kink so narrow forcing features are never skipped
    knots = [t0] + [b for b in hyp.breakpoints if t0 < b < horizon] + [horizon]
    knots = sorted(set(knots))
    ts_all = [np.array([t0])]
    ys_all = [np.array([y0])]
    y_cur = y0
    for lo, hi in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(rhs, (lo, hi), [y_cur], method="RK45",
                        rtol=_ODE_TOL, atol=_ODE_TOL, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"ODE integration failed on [{lo},{hi}]: "
                               f"{sol.message}")
        y_cur = float(sol.y[0, -1])
        ts_all.append(sol.t[1:])
        ys_all.append(np.maximum(sol.y[0, 1:], 0.0))
    t = np.concatenate(ts_all)
    y = np.concatenate(ys_all)
    tq = np.linspace(t0, horizon, n_out)
    return tq, np.interp(tq, t, y)


def lemma2_attraction_time(hyp: AveragedHypotheses, rho_tilde: float,
                           alpha_tilde: float, beta_tilde: float,
                           t0: float, horizon: float | None = None,
                           fan: int = 5) -> float:
    """Empirical attraction time of the frozen ODE.

    Integrates from a fan of initial values z0 in [0, alpha_tilde] and
    returns the first elapsed time after which every trajectory stays
    below rho_tilde for the rest of the horizon.  Raises when the horizon
    ends before attraction is observed.
    """
    if horizon is None:
        horizon = t0 + max(50.0, 20.0 / hyp.p)
    worst = 0.0
    for z0 in np.linspace(0.0, alpha_tilde, fan):
        t, z = solve_comparison_ode(hyp, float(z0), t0, horizon,
                                    variant="frozen", frozen_beta=beta_tilde,
                                    n_out=4001)
        above = z >= rho_tilde
        if above[-1]:
            raise RuntimeError(
                f"attraction to rho={rho_tilde} not attained by t={horizon}")
        last = np.where(above)[0]
        if last.size:
            worst = max(worst, float(t[last[-1] + 1] - t0))
    return worst


def lemma2_formula_T_hat(hyp: AveragedHypotheses, lc: LemmaConstants,
                         rho_tilde: float, alpha_tilde: float, t0: float,
                         scan_horizon: float = 2000.0) -> float:
    """The proof's sufficient attraction time max{T0, T2, T4}.

    Each T_i is located by forward scanning of the corresponding
    exponential-smallness condition; the result is an upper bound on the
    empirical attraction time, not a tight one.
    """
    p, q, M = hyp.p, hyp.q, hyp.M
    h = h_function(hyp, lc.theta_v)
    t_grid = _time_grid(scan_horizon, 40001, hyp.breakpoints)
    G = _cumulative_g(hyp.g, t_grid)

    def g_int(a, b):
        return float(np.interp(b, t_grid, G) - np.interp(a, t_grid, G))

    # T0: the homogeneous part alpha * e^{-p(t-t0) + int g} falls below rho/3
    def cond0(t):
        if t <= t0:
            return False
        expo = min(-p * (t - t0) + g_int(t0, t), 700.0)
        return alpha_tilde * math.exp(expo) < rho_tilde / 3.0

    T0 = _scan_forward(cond0, t0 + _SCAN_STEP, scan_horizon) - t0

    def weight(tau):
        return math.exp(hyp.xi * (tau ** hyp.chi - tau ** hyp.kappa))

    T2 = 0.0
    if hyp.g1 is not _zero2:
        target = lc.m * rho_tilde * math.exp(-2.0 * M) / 6.0
        T1 = _scan_forward(
            lambda t: hyp.g1(t, lc.beta_tilde) * weight(t) <= target,
            max(lc.t_tilde, lc.t_theta), scan_horizon)
        sigma1 = max(hyp.g1(t, lc.beta_tilde) for t in t_grid[t_grid <= scan_horizon][::10])
        rhs = math.log(max(1e-300, 6.0 * sigma1 / (p * rho_tilde))) + M + q + p * T1
        T2 = _scan_forward(lambda t: h(t) > rhs, max(lc.t_tilde, T1), scan_horizon)

    T4 = 0.0
    if hyp.g2 is not _zero2:
        ts = t_grid
        vals = np.array([hyp.g2(t, lc.beta_tilde) * weight(t) for t in ts])
        tail = np.concatenate([[0.0], cumulative_trapezoid(vals[::-1], ts)])[::-1]
        ok = math.exp(2.0 * M) * tail < rho_tilde / 6.0
        if not ok[-1]:
            raise RuntimeError("T3 condition not attained within the scan horizon")
        T3 = max(float(ts[int(np.argmax(ok))]), lc.t_tilde, lc.t_theta)
        ef = np.exp(np.minimum(p * ts, 700.0))
        upto = ts <= T3
        sigma2 = float(np.trapezoid(
            np.array([hyp.g2(t, lc.beta_tilde) for t in ts[upto]]) * ef[upto],
            ts[upto])) + 1e-300
        rhs = math.log(6.0 * sigma2 / rho_tilde) + q + M
        T4 = _scan_forward(lambda t: h(t) > rhs, max(lc.t_tilde, T3), scan_horizon)

    return max(T0, T2, T4)


# ---------------------------------------------------------------------------
# PDE-level wiring
# ---------------------------------------------------------------------------

def theorem1_wiring(alpha: float, constants: ConstantsBundle,
                    hyp: AveragedHypotheses,
                    scan_horizon: float = 500.0) -> tuple[float, float]:
    """(beta(alpha), s(alpha)) for the eventual-boundedness claim.

    beta(alpha) = sqrt(beta_tilde(alpha^2 c2^2) / c1^2) and
    s(alpha) = s_tilde(alpha^2 c2^2), with gamma = 1 constants.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    alpha_tilde = alpha ** 2 * constants.c2_sq
    lc = lemma1_constants(hyp, alpha_tilde, scan_horizon)
    beta_alpha = math.sqrt(lc.beta_tilde / constants.c1_sq)
    return beta_alpha, lc.s_tilde
