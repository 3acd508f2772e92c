"""Triangular-spike forcing family with analytic integrals.

b^2(t) is a train of disjoint isosceles triangles centered at the
integers: triangle n has base n^{-alpha}, apex height 2*b0^2*n^{beta}
and hence area b0^2 / n^{gamma_ex} with gamma_ex = alpha - beta in
[0, 1).  The family is the stock example of an admissible non-autonomous
forcing bound: its averaged-hypothesis constants are

    q = b0^2 / (1 - gamma_ex),   chi = kappa = 1 - gamma_ex,
    M = 9 b0^2 / (2 (1 - gamma_ex)),
    sigma = b0^2 (2 + 2^{1 - gamma_ex} / (1 - gamma_ex)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .comparison import AveragedHypotheses


@dataclass(frozen=True)
class SpikeFamily:
    b0_sq: float
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.b0_sq <= 0:
            raise ValueError("b0_sq must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if not self.alpha - 1 < self.beta <= self.alpha:
            raise ValueError("beta must lie in (alpha-1, alpha]")
        # supports are disjoint: base <= 1 < spacing for alpha >= 1
        if self.half_base(1) > 0.5:
            raise ValueError("triangle supports overlap")

    @property
    def gamma_ex(self) -> float:
        return self.alpha - self.beta

    def half_base(self, n: int) -> float:
        return 0.5 / n ** self.alpha

    def apex(self, n: int) -> float:
        return 2.0 * self.b0_sq * n ** self.beta

    def area(self, n: int) -> float:
        return self.b0_sq / n ** self.gamma_ex

    def breakpoints(self, horizon: float) -> tuple:
        """Feet and apexes of every triangle up to the horizon."""
        pts = []
        for n in range(1, int(math.ceil(horizon)) + 2):
            h = self.half_base(n)
            pts.extend((n - h, float(n), n + h))
        return tuple(p for p in pts if p <= horizon + 1.0)


def spike_value(t: float, fam: SpikeFamily) -> float:
    """b^2(t): piecewise-linear triangle train, 0 outside the supports."""
    if t < 0.5:
        return 0.0
    n = int(round(t))
    if n < 1:
        return 0.0
    h = fam.half_base(n)
    dist = abs(t - n)
    if dist >= h:
        return 0.0
    slope = 4.0 * fam.b0_sq * n ** (fam.alpha + fam.beta)
    return slope * (h - dist)


def _cumulative(t: float, fam: SpikeFamily) -> float:
    """int_0^t b^2, exact piecewise-quadratic closed form."""
    if t <= 0.5:
        return 0.0
    n_t = int(round(t))
    # full triangles strictly before the enclosing one
    total = sum(fam.area(n) for n in range(1, n_t))
    if n_t < 1:
        return total
    h = fam.half_base(n_t)
    slope = 4.0 * fam.b0_sq * n_t ** (fam.alpha + fam.beta)
    left, right = n_t - h, n_t + h
    if t <= left:
        return total
    if t >= right:
        return total + fam.area(n_t)
    if t <= n_t:
        return total + 0.5 * slope * (t - left) ** 2
    return total + fam.area(n_t) - 0.5 * slope * (right - t) ** 2


def spike_integral(t0: float, t: float, fam: SpikeFamily) -> float:
    """Exact integral of b^2 over [t0, t]."""
    if not 0.0 <= t0 <= t:
        raise ValueError("need 0 <= t0 <= t")
    return _cumulative(t, fam) - _cumulative(t0, fam)


def spike_hypothesis_constants(fam: SpikeFamily, p: float,
                               horizon: float = 300.0) -> AveragedHypotheses:
    """Populated averaged-hypotheses record for the spike family.

    Admissibility requires b0^2 < p (the averaged drain must beat the
    averaged injection).
    """
    if fam.b0_sq >= p:
        raise ValueError(f"spike family needs b0^2 < p ({fam.b0_sq} >= {p})")
    g_ex = fam.gamma_ex
    one_m = 1.0 - g_ex
    return AveragedHypotheses(
        g=lambda t: spike_value(t, fam),
        sigma=fam.b0_sq * (2.0 + 2.0 ** one_m / one_m),
        chi=one_m,
        kappa=one_m,
        q=fam.b0_sq / one_m,
        M=fam.b0_sq * 9.0 / (2.0 * one_m),
        p=p,
        xi=0.0,
        breakpoints=fam.breakpoints(horizon),
    )
