"""End-to-end stability experiments and report emission.

Drivers that run the finite-difference solver on a forced problem
f = F(u) - a(t) u_t, record the distance/functional series, evaluate the
guaranteed decay envelopes (exponential for the sigma-scheduled
functionals, power-law for the weak-restoring-force family), and write
CSV/JSON reports with optional figures.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .core_model import ProblemSpec, StatePair
from .fdsolver import FDConfig, solve_fd
from .functionals import (ConstantsBundle, PotentialSpec, compute_constants,
                          distance_d, distance_d1, lyapunov_V, lyapunov_W,
                          hamiltonian_v, m_of, B_inverse)

SCHEMA_VERSION = "dwl-report-1"

SERIES_COLUMNS = ("t", "d", "d1", "V", "W", "v_ham")


@dataclass
class StabilityReport:
    series: dict = field(default_factory=dict)   # column name -> list
    envelope: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    def __post_init__(self):
        for v in self.verdicts:
            if "claim" not in v or "tolerance" not in v:
                raise ValueError("every verdict needs a claim and a tolerance")

    @property
    def all_passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def add_verdict(self, claim: str, passed: bool, margin: float,
                    tolerance: float):
        self.verdicts.append({"claim": claim, "passed": bool(passed),
                              "margin": float(margin),
                              "tolerance": float(tolerance)})


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def big_M(epsilon: float, nu: float) -> float:
    """M = (1 + eps*pi^2 + eps^3*pi^4)/nu + 1/(eps*pi^2) + 1/2."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    pi2 = math.pi ** 2
    return ((1.0 + epsilon * pi2 + epsilon ** 3 * pi2 ** 2) / nu
            + 1.0 / (epsilon * pi2) + 0.5)


def gamma_schedule_thm2(sigma: float, A: float, A_prime: float, tau: float,
                        epsilon: float, nu: float) -> float:
    """gamma(sigma) = (A*sigma^tau + A')*eps + M."""
    if not 0.0 <= tau < 2.0:
        raise ValueError("tau must lie in [0,2)")
    return (A * sigma ** tau + A_prime) * epsilon + big_M(epsilon, nu)


def delta_schedule_thm2(sigma: float, pot: PotentialSpec,
                        constants: ConstantsBundle) -> float:
    """delta(sigma) = B^{-1}(sigma * k1 / c2) for the given gamma-constants."""
    y = sigma * math.sqrt(constants.k1_sq / constants.c2_sq)
    return B_inverse(pot, y)


def thm3_bounds(alpha: float, pot: PotentialSpec, epsilon: float,
                A_of_d1, nu: float, K_bound: float = 0.0) -> dict:
    """The chained constants of the small-neighborhood exponential claim.

    beta1(alpha) = 2*sqrt(2)*sqrt(1+m(alpha))*alpha, gamma = A(beta1)*eps + M,
    beta(alpha) = (c2/k1)*B(alpha), D = (c2/k1)*sqrt(1+m(beta)),
    C = k3^2 / (c2^2 * (1 + m(beta))).
    """
    beta1 = 2.0 * math.sqrt(2.0) * math.sqrt(1.0 + m_of(pot, alpha)) * alpha
    gamma = A_of_d1(beta1) * epsilon + big_M(epsilon, nu)
    cb = compute_constants(epsilon, gamma, K_bound=K_bound)
    beta_alpha = math.sqrt(cb.c2_sq / cb.k1_sq) \
        * math.sqrt(1.0 + m_of(pot, alpha)) * alpha
    mb = m_of(pot, beta_alpha)
    return {
        "beta1": beta1,
        "gamma": gamma,
        "beta": beta_alpha,
        "D": math.sqrt(cb.c2_sq / cb.k1_sq) * math.sqrt(1.0 + mb),
        "C": cb.k3_sq / (cb.c2_sq * (1.0 + mb)),
        "constants": cb,
    }


def thm4_envelope_constants(gamma: float, epsilon: float, D_pot: float,
                            tau: float) -> dict:
    """All power-envelope constants for a tau-growth potential.

    G_gamma(d) = c2^2 d^2 + D_pot*(gamma+1)*d^{tau+1}; its inverse is by
    bisection; E = k3' / [2 D_pot (gamma+1)]^{2/(tau+1)} * (1-tau)/(1+tau).
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0,1)")
    cb = compute_constants(epsilon, gamma)
    c2_sq = cb.c2_sq

    def G(d):
        return c2_sq * d * d + D_pot * (gamma + 1.0) * d ** (tau + 1.0)

    def G_inverse(y):
        if y < 0:
            raise ValueError("y must be >= 0")
        if y == 0.0:
            return 0.0
        hi = 1.0
        while G(hi) < y:
            hi *= 2.0
        lo = 0.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if G(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    E = math.nan
    if D_pot > 0:
        E = (math.sqrt(cb.k3p_sq)
             / (2.0 * D_pot * (gamma + 1.0)) ** (2.0 / (tau + 1.0))
             * (1.0 - tau) / (1.0 + tau))
    return {
        "k1p_sq": cb.k1p_sq,
        "k3p_sq": cb.k3p_sq,
        "E": E,
        "G": G,
        "G_inverse": G_inverse,
        "constants": cb,
        "delta_of_sigma": lambda s: G_inverse(s * s * cb.k1p_sq),
    }


# ---------------------------------------------------------------------------
# the experiment driver
# ---------------------------------------------------------------------------

def _series_from_run(gf, gamma, epsilon, pot) -> dict:
    cols = {k: [] for k in SERIES_COLUMNS}
    for j in range(gf.nt):
        st = StatePair.from_grid(gf, j)
        cols["t"].append(float(gf.times[j]))
        cols["d"].append(distance_d(st))
        cols["d1"].append(distance_d1(st))
        cols["V"].append(lyapunov_V(st, gamma, epsilon))
        cols["W"].append(lyapunov_W(st, gamma, epsilon, pot))
        cols["v_ham"].append(hamiltonian_v(st, pot))
    return cols


def _fit_decay_rate(t: np.ndarray, d: np.ndarray) -> float:
    """Least-squares slope of ln d over the second half of the run."""
    half = len(t) // 2
    tt, dd = t[half:], d[half:]
    mask = dd > 0
    if mask.sum() < 2:
        return math.nan
    coef = np.polyfit(tt[mask], np.log(dd[mask]), 1)
    return float(-coef[0])


def run_decay_experiment(spec_P: ProblemSpec, pot: PotentialSpec, a_callable,
                         d0_family, horizon: float, theorem: int, *,
                         sigma: float = 1.0, growth_A: float = 0.1,
                         growth_A_prime: float = 0.5, growth_tau: float = 1.0,
                         D_pot: float = 0.0, pot_tau: float = 0.0,
                         fdconfig: FDConfig | None = None,
                         t0: float = 0.0) -> StabilityReport:
    """Run the decay experiment for one theorem variant.

    ``spec_P`` supplies epsilon (canonical form assumed); the forcing is
    assembled internally as f = F(u) - a(t)*u_t.  ``d0_family`` is a list
    of (u0, u1) callable pairs.  The report carries one series per family
    member (suffix #i for i > 0), the envelope constants, and verdicts:
    hypothesis checks, the pointwise envelope, and monotonicity of W.
    """
    if theorem not in (2, 3, 4):
        raise ValueError("theorem must be 2, 3 or 4")
    eps = spec_P.epsilon
    if spec_P.c != 1.0:
        raise ValueError("rescale to c=1 first")
    if fdconfig is None:
        dt = 2.5e-4
        fdconfig = FDConfig(nx=201, dt=dt, store_every=max(1, int(round(0.05 / dt))))

    report = StabilityReport()
    a_samples = np.array([a_callable(t) for t in
                          np.linspace(t0, t0 + horizon, 2001)])
    inf_a = float(np.min(a_samples))
    nu = eps * math.pi ** 2 + inf_a
    if nu <= 0:
        raise ValueError(f"need eps*pi^2 + inf a > 0, got {nu}")

    # K bound on F_u over the expected excursion range
    zr = np.linspace(-max(sigma, 1.0), max(sigma, 1.0), 4001)
    zr = zr[np.abs(zr) > 1e-9] if theorem == 4 else zr  # F' may blow up at 0
    K_bound = max(0.0, float(np.max(pot.fprime(zr))))
    if K_bound >= 3.0 * math.pi ** 2 / 4.0:
        raise ValueError("F_u exceeds the admissible bound 3*pi^2/4")

    gamma = gamma_schedule_thm2(sigma, growth_A, growth_A_prime, growth_tau,
                                eps, nu)
    if theorem in (2, 3):
        cb = compute_constants(eps, gamma, K_bound=K_bound)
        delta = delta_schedule_thm2(sigma, pot, cb)
        D_env = math.sqrt(cb.c2_sq / cb.k1_sq) * math.sqrt(1.0 + m_of(pot, delta))
        C_env = cb.k3_sq / (cb.c2_sq * (1.0 + m_of(pot, sigma)))
        report.envelope = {"kind": "exponential", "D": D_env, "C": C_env,
                           "C_half": C_env / 2.0, "T_tilde": 0.0,
                           "gamma": gamma, "delta": delta, "sigma": sigma}
    else:
        tc = thm4_envelope_constants(gamma, eps, D_pot, pot_tau)
        cb = tc["constants"]
        delta = tc["delta_of_sigma"](sigma)
        report.envelope = {"kind": "power", "E": tc["E"],
                           "k1p_sq": tc["k1p_sq"], "tau": pot_tau,
                           "T_tilde": 0.0, "gamma": gamma, "delta": delta,
                           "sigma": sigma}
    report.config_echo = {
        "theorem": theorem, "epsilon": eps, "sigma": sigma, "gamma": gamma,
        "delta": delta, "horizon": horizon, "t0": t0, "nx": fdconfig.nx,
        "dt": fdconfig.dt, "inf_a": inf_a, "nu": nu, "K_bound": K_bound,
        "growth_A": growth_A, "growth_A_prime": growth_A_prime,
        "growth_tau": growth_tau, "D_pot": D_pot, "pot_tau": pot_tau,
        "n_initial_states": len(d0_family),
    }

    F = np.vectorize(pot.F)

    def forcing(x, t, u, ux, uxx, ut):
        return F(u) - a_callable(t) * ut

    fitted = []
    for idx, (u0, u1) in enumerate(d0_family):
        spec = ProblemSpec(epsilon=eps, c=1.0, forcing=forcing,
                           u0=u0, u1=u1, T=math.inf)
        gf = solve_fd(spec, fdconfig, horizon)
        cols = _series_from_run(gf, gamma, eps, pot)
        suffix = "" if idx == 0 else f"#{idx}"
        if idx == 0:
            report.series.update(cols)
        else:
            for k in SERIES_COLUMNS[1:]:
                report.series[k + suffix] = cols[k]

        t = np.asarray(cols["t"]) + t0
        d = np.asarray(cols["d"])
        W = np.asarray(cols["W"])
        d0v = d[0]

        report.add_verdict(f"initial state inside delta(sigma){suffix}",
                           d0v < delta, delta - d0v, 0.0)
        umax = float(np.max(np.abs(gf.values)))
        zv = np.linspace(-umax, umax, 2001)
        if theorem == 4:
            zv = zv[np.abs(zv) > 1e-9]
        kv = float(np.max(pot.fprime(zv)))
        report.add_verdict(f"F_u <= K on visited range{suffix}",
                           kv <= K_bound + 1e-9, K_bound - kv, 1e-9)
        abound = growth_A * sigma ** growth_tau + growth_A_prime
        aviol = float(np.max(np.abs(a_samples))) - abound
        report.add_verdict(f"|a| within declared growth bound{suffix}",
                           aviol <= 1e-12, -aviol, 1e-12)

        # W monotone along the tube
        dW = np.diff(W)
        wtol = 1e-6 * max(1.0, float(np.max(np.abs(W))))
        report.add_verdict(f"W nonincreasing along run{suffix}",
                           float(np.max(dW)) <= wtol,
                           wtol - float(np.max(dW)), wtol)

        if theorem in (2, 3):
            env = report.envelope["D"] * np.exp(
                -report.envelope["C"] * (t - t0)) * d0v
            slack = 0.01 * env
            worst = float(np.max(d - env - slack))
            report.add_verdict(f"exponential envelope (rate C){suffix}",
                               worst <= 0.0, -worst, 0.01)
            env_half = report.envelope["D"] * np.exp(
                -0.5 * report.envelope["C"] * (t - t0)) * d0v
            worst_h = float(np.max(d - env_half - 0.01 * env_half))
            report.add_verdict(f"exponential envelope (rate C/2){suffix}",
                               worst_h <= 0.0, -worst_h, 0.01)
            fitted.append(_fit_decay_rate(t, d))
        else:
            T_tilde, margin = _power_envelope_check(
                t, d, W, t0, report.envelope, cb, D_pot, pot_tau)
            if idx == 0:
                report.envelope["T_tilde"] = T_tilde
            report.add_verdict(f"power envelope after T_tilde{suffix}",
                               margin >= 0.0, margin, 0.0)
    if fitted:
        report.envelope["C_fitted"] = fitted
    return report


def _power_envelope_check(t, d, W, t0, env, cb: ConstantsBundle,
                          D_pot: float, tau: float):
    """Locate the crossover T_tilde and check the power-law envelope.

    T_tilde is the first time the linear branch W/(2 c2^2) dominates the
    power branch (W/(2 D (gamma+1)))^{2/(tau+1)}, i.e. W has dropped to
    the branch-equality level; before that W decays at least
    exponentially, after it the envelope d^2 <= 1/(k1'^2 [E dt]^{(1+tau)/(1-tau)})
    applies.
    """
    gamma = env["gamma"]
    B2 = 2.0 * D_pot * (gamma + 1.0)

    def linear_ge_power(w):
        return w / (2.0 * cb.c2_sq) >= (w / B2) ** (2.0 / (tau + 1.0))

    T_tilde = 0.0
    if not linear_ge_power(W[0]):
        idx = next((j for j, w in enumerate(W) if linear_ge_power(w)), None)
        if idx is None:
            return float(t[-1] - t0), -math.inf  # crossover never reached
        T_tilde = float(t[idx] - t0)
    E = env["E"]
    expo = (1.0 + tau) / (1.0 - tau)
    margin = math.inf
    for tj, dj in zip(t, d):
        dt_rel = tj - t0 - T_tilde
        if dt_rel <= 0:
            continue
        bound_sq = 1.0 / (cb.k1p_sq * (E * dt_rel) ** expo)
        margin = min(margin, bound_sq - dj * dj)
    return T_tilde, margin


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def emit_report(report: StabilityReport, outdir, formats=("csv", "json"),
                figures: bool = False) -> list:
    """Write series CSV, verdict JSON (schema-versioned) and figures.

    Returns the list of files written.
    """
    os.makedirs(outdir, exist_ok=True)
    written = []
    if "csv" in formats:
        path = os.path.join(outdir, "series.csv")
        cols = list(report.series.keys()) or list(SERIES_COLUMNS)
        n = len(next(iter(report.series.values()))) if report.series else 0
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for i in range(n):
                wr.writerow([f"{report.series[c][i]:.12g}" for c in cols])
        written.append(path)
    if "json" in formats:
        path = os.path.join(outdir, "report.json")
        payload = {
            "schema": report.schema,
            "envelope": {k: v for k, v in report.envelope.items()
                         if _jsonable(v)},
            "verdicts": report.verdicts,
            "config_echo": report.config_echo,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
        written.append(path)
    if figures:
        from . import plots
        written.extend(plots.render_report_figures(report, outdir))
    return written


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, dict, type(None)))


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    raise TypeError(f"not JSON-serializable: {type(v)}")


def read_report(outdir) -> StabilityReport:
    """Inverse of :func:`emit_report` (CSV + JSON)."""
    with open(os.path.join(outdir, "report.json")) as fh:
        payload = json.load(fh)
    series = {}
    path = os.path.join(outdir, "series.csv")
    if os.path.exists(path):
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            cols = next(rd)
            series = {c: [] for c in cols}
            for row in rd:
                for c, v in zip(cols, row):
                    series[c].append(float(v))
    return StabilityReport(series=series, envelope=payload["envelope"],
                           verdicts=payload["verdicts"],
                           config_echo=payload["config_echo"],
                           schema=payload["schema"])
