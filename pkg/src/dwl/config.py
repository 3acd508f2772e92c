"""YAML configuration loading and object assembly for the CLI.

A config file is a key-value tree with the sections ``problem`` (epsilon,
c, forcing, initial data), ``solve`` (method and grid parameters),
``experiment`` (theorem selection and schedule parameters), ``kernel``
(table/certification grid) and ``lemma`` (comparison hypotheses).  Named
forcing families: ``sine_gordon``, ``linear_damping``, ``spike``,
``custom_table`` and ``none``.
"""

from __future__ import annotations

import math

import numpy as np
import yaml

from .core_model import ProblemSpec
from .functionals import PotentialSpec
from .forcing import SpikeFamily, spike_value


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a mapping")
    return cfg


def _sine_initial(amplitude: float, mode: int = 1):
    k = mode * math.pi
    return lambda x: amplitude * np.sin(k * np.asarray(x, dtype=float))


def build_initial_family(cfg: dict) -> list:
    """List of (u0, u1) pairs from ``problem.initial`` (a map or a list)."""
    entries = cfg.get("problem", {}).get("initial", {"amplitude": 0.1})
    if isinstance(entries, dict):
        entries = [entries]
    family = []
    for e in entries:
        u0 = _sine_initial(float(e.get("amplitude", 0.1)),
                           int(e.get("mode", 1)))
        u1 = _sine_initial(float(e.get("velocity_amplitude", 0.0)),
                           int(e.get("velocity_mode", 1)))
        family.append((u0, u1))
    return family


def build_damping(cfg: dict):
    """The velocity-damping coefficient a(t) from ``problem.forcing.a``."""
    a = float(cfg.get("problem", {}).get("forcing", {}).get("a", 0.0))
    return lambda t: a


def build_potential(cfg: dict) -> PotentialSpec:
    fc = cfg.get("problem", {}).get("forcing", {})
    kind = fc.get("kind", "none")
    if kind in ("sine_gordon", "spike"):
        b = float(fc.get("b", 1.0))
        return PotentialSpec(F=lambda u: -b * math.sin(u),
                             F_prime=lambda z: -b * np.cos(z),
                             antiderivative=lambda u: b * (math.cos(u) - 1.0))
    if kind == "linear_damping":
        b = float(fc.get("b", 0.0))
        return PotentialSpec(F=lambda u: -b * u,
                             F_prime=lambda z: -b * np.ones_like(np.asarray(z, float)),
                             antiderivative=lambda u: -0.5 * b * u * u)
    if kind == "sqrt_restoring":
        k = float(fc.get("k", 0.5))
        return PotentialSpec(
            F=lambda u: -k * math.copysign(math.sqrt(abs(u)), u),
            F_prime=lambda z: -k / (2.0 * np.sqrt(np.abs(z))),
            antiderivative=lambda u: -k * (2.0 / 3.0) * abs(u) ** 1.5)
    return PotentialSpec(F=lambda u: 0.0,
                         F_prime=lambda z: np.zeros_like(np.asarray(z, float)),
                         antiderivative=lambda u: 0.0)


def build_forcing(cfg: dict):
    """Assemble f(x,t,u,ux,uxx,ut) from the ``problem.forcing`` block."""
    fc = cfg.get("problem", {}).get("forcing", {})
    kind = fc.get("kind", "none")
    a = float(fc.get("a", 0.0))
    if kind == "none":
        return lambda x, t, u, ux, uxx, ut: np.zeros_like(np.asarray(u, float))
    if kind == "sine_gordon":
        b = float(fc.get("b", 1.0))
        return lambda x, t, u, ux, uxx, ut: -b * np.sin(u) - a * ut
    if kind == "linear_damping":
        b = float(fc.get("b", 0.0))
        return lambda x, t, u, ux, uxx, ut: -b * u - a * ut
    if kind == "sqrt_restoring":
        k = float(fc.get("k", 0.5))
        return lambda x, t, u, ux, uxx, ut: \
            -k * np.sign(u) * np.sqrt(np.abs(u)) - a * ut
    if kind == "spike":
        fam = spike_family_from(fc)
        sgn = -1.0 if fc.get("attracting", True) else 1.0

        def f(x, t, u, ux, uxx, ut):
            b2 = spike_value(t, fam)
            return sgn * math.sqrt(b2) * np.sin(u) - a * ut
        return f
    if kind == "custom_table":
        ts = np.asarray(fc["t"], dtype=float)
        gs = np.asarray(fc["g"], dtype=float)
        if ts.ndim != 1 or ts.shape != gs.shape:
            raise ValueError("custom_table needs matching 1-d t and g lists")

        def f(x, t, u, ux, uxx, ut):
            return float(np.interp(t, ts, gs)) * np.sin(u) - a * ut
        return f
    raise ValueError(f"unknown forcing kind: {kind!r}")


def spike_family_from(fc: dict) -> SpikeFamily:
    return SpikeFamily(b0_sq=float(fc.get("b0_sq", 1e-3)),
                       alpha=float(fc.get("alpha", 1.0)),
                       beta=float(fc.get("beta", 1.0)))


def build_problem(cfg: dict) -> ProblemSpec:
    pb = cfg.get("problem", {})
    family = build_initial_family(cfg)
    u0, u1 = family[0]
    return ProblemSpec(epsilon=float(pb.get("epsilon", 1.0)),
                       c=float(pb.get("c", 1.0)),
                       forcing=build_forcing(cfg),
                       u0=u0, u1=u1,
                       T=float(pb.get("T", math.inf)))
