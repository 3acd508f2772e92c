"""Command-line interface.

Subcommands: solve, kernel-table, lemma, spike, certify, experiment,
functionals.  All take ``--config file`` (YAML key-value tree) and
``--out dir``; exit code 0 = all verdicts pass, 2 = some verdict failed,
1 = runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from .core_model import ProblemSpec, StatePair, write_grid_csv, read_grid_csv
from .fdsolver import FDConfig, solve_fd
from .picard import PicardConfig, solve_picard
from .kernels import KernelParams, ThetaSeries, fundamental_k, verify_kernel_bounds
from .functionals import (distance_d, distance_d1, lyapunov_V, lyapunov_W,
                          hamiltonian_v)
from .comparison import (AveragedHypotheses, lemma1_constants,
                         solve_comparison_ode)
from .forcing import SpikeFamily, spike_value, spike_hypothesis_constants
from .scenarios import run_decay_experiment, emit_report


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load(args) -> dict:
    return cfgmod.load_config(args.config) if args.config else {}


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_scrub)


def _scrub(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON-serializable: {type(v)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    spec = cfgmod.build_problem(cfg)
    sv = cfg.get("solve", {})
    horizon = args.horizon or float(sv.get("horizon", 1.0))
    nx = args.nx or int(sv.get("nx", 201))
    dt = args.dt or float(sv.get("dt", 2.5e-4))
    method = args.method or sv.get("method", "fd")
    meta = {"method": method, "horizon": horizon, "nx": nx, "dt": dt}
    if method == "picard":
        pc = PicardConfig(rho=args.rho or float(sv.get("rho", 1.0)),
                          fix_tol=args.fix_tol or float(sv.get("fix_tol", 1e-9)),
                          max_iter=args.max_iter or int(sv.get("max_iter", 60)),
                          nx=nx, dt=dt)
        gf, reports = solve_picard(spec, pc, horizon)
        meta["segments"] = [dataclasses.asdict(r) for r in reports]
    elif method == "fd":
        fc = FDConfig(nx=nx, dt=dt,
                      store_every=int(sv.get("store_every", 1)),
                      scheme=sv.get("scheme", "semi-implicit"))
        gf = solve_fd(spec, fc, horizon)
    else:
        raise ValueError(f"unknown method {method!r}")
    write_grid_csv(gf, os.path.join(out, "solution.csv"))
    _write_json(os.path.join(out, "run.json"), meta)
    from . import plots
    plots.render_solution_heatmap(gf, out)
    print(f"solved {method}: nx={gf.nx} nt={gf.nt} -> {out}/solution.csv")
    return 0


def cmd_kernel_table(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    kc = cfg.get("kernel", {})
    eps = float(kc.get("epsilon", 1.0))
    c = float(kc.get("c", 1.0))
    xi = float(kc.get("xi", 0.5))
    xs = np.asarray(kc.get("x", np.linspace(0.1, 0.9, 5)), dtype=float)
    ss = np.asarray(kc.get("s", np.linspace(0.1, 1.0, 4)), dtype=float)
    params = KernelParams(epsilon=eps, c=c)
    ts = ThetaSeries(eps, c, n_modes=int(kc.get("n_modes", 256)))
    path = os.path.join(out, "kernel_table.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "s", "K", "theta", "w", "w_t", "w_x", "w_xx", "err"])
        for x in xs:
            for s in ss:
                kv = fundamental_k(abs(x), s, params)
                err = kv.est_error + ts.truncation_estimate(s)
                wr.writerow([f"{v:.12g}" for v in (
                    x, s, kv.value, ts.theta(x, s), ts.w(x, xi, s),
                    ts.w_t(x, xi, s), ts.w_x(x, xi, s), ts.w_xx(x, xi, s),
                    err)])
    print(f"kernel table ({xs.size * ss.size} rows, xi={xi}) -> {path}")
    return 0


def cmd_certify(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    kc = cfg.get("kernel", {})
    eps = float(kc.get("epsilon", 1.0))
    c = float(kc.get("c", 1.0))
    xs = np.asarray(kc.get("x", [0.25, 0.5, 0.75]), dtype=float)
    ss = np.asarray(kc.get("s", [0.2, 0.5, 1.0]), dtype=float)
    params = KernelParams(epsilon=eps, c=c)
    verdicts = []
    for x in xs:
        for s in ss:
            rep = verify_kernel_bounds(float(x), float(s), params)
            for name, margin in rep.margins.items():
                verdicts.append({
                    "claim": f"kernel bound {name} at x={x:g}, s={s:g}",
                    "passed": bool(margin >= -10.0 * rep.est_error),
                    "margin": float(margin),
                    "tolerance": 10.0 * rep.est_error,
                })
    _write_json(os.path.join(out, "certify.json"),
                {"schema": "dwl-certify-1", "epsilon": eps, "c": c,
                 "verdicts": verdicts})
    npass = sum(v["passed"] for v in verdicts)
    print(f"kernel certification: {npass}/{len(verdicts)} bounds hold "
          f"-> {out}/certify.json")
    return 0 if npass == len(verdicts) else 2


def _hyp_from_config(cfg: dict) -> tuple[AveragedHypotheses, dict]:
    lc = cfg.get("lemma", {})
    hc = lc.get("hypotheses", {})
    kind = hc.get("kind", "constant")
    if kind == "spike":
        fam = SpikeFamily(b0_sq=float(hc.get("b0_sq", 1e-3)),
                          alpha=float(hc.get("alpha", 1.0)),
                          beta=float(hc.get("beta", 1.0)))
        hyp = spike_hypothesis_constants(
            fam, p=float(hc.get("p", 0.1)),
            horizon=float(hc.get("horizon", 300.0)))
        return hyp, lc
    if kind == "constant":
        g0 = float(hc.get("g0", 0.0))
        hyp = AveragedHypotheses(
            g=lambda t: g0, sigma=float(hc.get("sigma", g0)),
            chi=float(hc.get("chi", 0.5)), kappa=float(hc.get("kappa", 0.5)),
            q=float(hc.get("q", 0.0)), M=float(hc.get("M", 1.0)),
            p=float(hc.get("p", 0.1)), xi=float(hc.get("xi", 0.0)))
        return hyp, lc
    raise ValueError(f"unknown hypotheses kind {kind!r}")


def cmd_lemma(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    hyp, lc = _hyp_from_config(cfg)
    alpha_tilde = float(lc.get("alpha_tilde", 0.1))
    consts = lemma1_constants(hyp, alpha_tilde,
                              scan_horizon=float(lc.get("scan_horizon", 500.0)))
    payload = {"schema": "dwl-lemma-1", "alpha_tilde": alpha_tilde}
    payload.update({k: v for k, v in dataclasses.asdict(consts).items()})
    _write_json(os.path.join(out, "lemma_constants.json"), payload)

    y0 = float(lc.get("y0", alpha_tilde))
    t0 = float(lc.get("t0", consts.s_tilde))
    horizon = float(lc.get("horizon", 50.0))
    t, y = solve_comparison_ode(hyp, y0, t0, horizon)
    path = os.path.join(out, "trajectory.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "y"])
        for ti, yi in zip(t, y):
            wr.writerow([f"{ti:.12g}", f"{yi:.12g}"])
    ok = float(np.max(y)) <= consts.beta_tilde * (1.0 + 1e-9)
    print(f"lemma constants: m={consts.m:.6g} beta_tilde={consts.beta_tilde:.6g} "
          f"s_tilde={consts.s_tilde:.6g}; trajectory "
          f"{'stays below beta_tilde' if ok else 'EXCEEDS beta_tilde'}")
    return 0 if ok else 2


def cmd_spike(args) -> int:
    out = _outdir(args)
    fam = SpikeFamily(b0_sq=args.b0 ** 2, alpha=args.alpha, beta=args.beta)
    horizon = args.horizon
    if args.emit == "csv":
        path = os.path.join(out, "spike.csv")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "b2"])
            for t in np.linspace(0.0, horizon, args.samples):
                wr.writerow([f"{t:.12g}", f"{spike_value(float(t), fam):.12g}"])
        print(f"spike samples -> {path}")
    try:
        hyp = spike_hypothesis_constants(fam, p=args.p, horizon=horizon)
        payload = {"schema": "dwl-spike-1", "b0_sq": fam.b0_sq,
                   "alpha": fam.alpha, "beta": fam.beta,
                   "gamma_ex": fam.gamma_ex, "sigma": hyp.sigma,
                   "chi": hyp.chi, "kappa": hyp.kappa, "q": hyp.q,
                   "M": hyp.M, "p": hyp.p}
    except ValueError as exc:
        payload = {"schema": "dwl-spike-1", "b0_sq": fam.b0_sq,
                   "alpha": fam.alpha, "beta": fam.beta,
                   "gamma_ex": fam.gamma_ex, "error": str(exc)}
    _write_json(os.path.join(out, "spike_constants.json"), payload)
    print(f"spike constants -> {out}/spike_constants.json")
    return 0


def cmd_experiment(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    ex = cfg.get("experiment", {})
    spec = cfgmod.build_problem(cfg)
    pot = cfgmod.build_potential(cfg)
    a_fn = cfgmod.build_damping(cfg)
    family = cfgmod.build_initial_family(cfg)
    sv = cfg.get("solve", {})
    fdconfig = FDConfig(nx=int(sv.get("nx", 201)),
                        dt=float(sv.get("dt", 2.5e-4)),
                        store_every=int(sv.get("store_every", 200)))
    report = run_decay_experiment(
        spec, pot, a_fn, family,
        horizon=float(ex.get("horizon", 20.0)),
        theorem=int(ex.get("theorem", 2)),
        sigma=float(ex.get("sigma", 1.0)),
        growth_A=float(ex.get("growth_A", 0.1)),
        growth_A_prime=float(ex.get("growth_A_prime", 0.5)),
        growth_tau=float(ex.get("growth_tau", 1.0)),
        D_pot=float(ex.get("D_pot", 0.0)),
        pot_tau=float(ex.get("pot_tau", 0.0)),
        fdconfig=fdconfig)
    files = emit_report(report, out, figures=not args.no_figures)
    for v in report.verdicts:
        print(f"[{'PASS' if v['passed'] else 'FAIL'}] {v['claim']} "
              f"(margin {v['margin']:.3g})")
    print(f"report files: {', '.join(files)}")
    return 0 if report.all_passed else 2


def cmd_functionals(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    gf = read_grid_csv(args.trace)
    fn = cfg.get("functionals", {})
    gamma = float(fn.get("gamma", 1.0))
    eps = float(fn.get("epsilon", 1.0))
    pot = cfgmod.build_potential(cfg)
    path = os.path.join(out, "trace.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "d", "d1", "V", "W", "v_ham"])
        for j in range(gf.nt):
            st = StatePair.from_grid(gf, j)
            wr.writerow([f"{v:.12g}" for v in (
                gf.times[j], distance_d(st), distance_d1(st),
                lyapunov_V(st, gamma, eps), lyapunov_W(st, gamma, eps, pot),
                hamiltonian_v(st, pot))])
    print(f"functional trace ({gf.nt} rows) -> {path}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dwl",
        description="numerical laboratory for a dissipative wave equation")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="YAML config file")
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("solve", help="solve the PDE (picard or fd)")
    common(sp)
    sp.add_argument("--method", choices=["picard", "fd"], default=None)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--fix-tol", dest="fix_tol", type=float, default=None)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--nx", type=int, default=None)
    sp.add_argument("--dt", type=float, default=None)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("kernel-table", help="tabulate kernel values")
    common(sp)
    sp.set_defaults(func=cmd_kernel_table)

    sp = sub.add_parser("certify", help="certify kernel integral bounds")
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("lemma", help="comparison-lemma constants + trajectory")
    common(sp)
    sp.set_defaults(func=cmd_lemma)

    sp = sub.add_parser("spike", help="triangular spike family samples")
    common(sp)
    sp.add_argument("--b0", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--emit", choices=["csv", "none"], default="csv")
    sp.add_argument("--p", type=float, default=0.1)
    sp.add_argument("--horizon", type=float, default=20.0)
    sp.add_argument("--samples", type=int, default=2001)
    sp.set_defaults(func=cmd_spike)

    sp = sub.add_parser("experiment", help="run a decay experiment")
    common(sp)
    sp.add_argument("--no-figures", action="store_true")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("functionals", help="evaluate functionals on a trace")
    common(sp)
    sp.add_argument("--trace", required=True, help="solution CSV (x,t,u,ut)")
    sp.set_defaults(func=cmd_functionals)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failure -> exit 1 with a message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
