"""Distances, Liapunov functionals, and the explicit stability constants.

The energy distance d, its first-order variant d1, the quadratic
functional V, the potential-augmented W_gamma, the Hamiltonian energy,
the Poincare-ratio check, and the constants bundle (omega_i, c1, c2, c3,
A, p, k1, k3, k1', k3') used by the comparison lemmas and the decay
theorems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import StatePair

OMEGA1 = math.pi ** 4 / (1.0 + math.pi ** 4)
OMEGA2 = math.pi ** 4 / (1.0 + math.pi ** 2 + math.pi ** 4)
OMEGA3 = math.pi ** 2 / (1.0 + math.pi ** 2)

_M_SAMPLES_PER_UNIT = 2048
_M_SAFETY = 1.001


@dataclass(frozen=True)
class ConstantsBundle:
    epsilon: float
    gamma: float
    omega1: float
    omega2: float
    omega3: float
    c1_sq: float
    c2_sq: float
    c3_sq: float
    A: float
    p: float
    k1_sq: float
    k3_sq: float
    k1p_sq: float
    k3p_sq: float
    lambda_split: float
    K_bound: float

    def __post_init__(self):
        if self.c1_sq > self.c2_sq:
            raise ValueError("c1^2 must not exceed c2^2")


def compute_constants(epsilon: float, gamma: float, K_bound: float = 0.0,
                      lambda_split: float | None = None) -> ConstantsBundle:
    """All explicit constants for the given (epsilon, gamma, K).

    gamma must exceed 1/2.  K_bound is the upper bound on F_u and must be
    below 3*pi^2/4.  When lambda_split is omitted, the value maximizing
    k3^2, lambda* = (3*omega1 + 4K)/(3*(omega1 + pi^2)), is used.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if gamma <= 0.5:
        raise ValueError("gamma must exceed 1/2")
    if K_bound >= 3.0 * math.pi ** 2 / 4.0:
        raise ValueError("K must be below 3*pi^2/4")
    if lambda_split is None:
        lambda_split = (3.0 * OMEGA1 + 4.0 * K_bound) / (3.0 * (OMEGA1 + math.pi ** 2))
    if not 0.0 < lambda_split < 1.0:
        raise ValueError("lambda_split must lie in (0,1)")
    if 3.0 * lambda_split * math.pi ** 2 / 4.0 <= K_bound:
        raise ValueError("need 3*lambda*pi^2/4 > K")

    c2_sq = max(epsilon * (1.0 + epsilon) / 2.0, (1.0 + epsilon + gamma) / 2.0)
    c1_sq = min(epsilon ** 2 * OMEGA1 / 8.0, (gamma - 0.5) / 2.0)
    A = epsilon / 2.0 + 2.0 / epsilon
    c3_sq = OMEGA2 * epsilon / 2.0
    k1_sq = min(epsilon ** 2 * OMEGA3 / 8.0, (2.0 * gamma - 1.0) / 4.0)
    k3_sq = min(3.0 * epsilon * (1.0 - lambda_split) * OMEGA1 / 4.0,
                epsilon * (3.0 * lambda_split * math.pi ** 2 / 4.0 - K_bound),
                1.0)
    k1p_sq = 0.5 * min(gamma - 0.5, epsilon ** 2 / 4.0, (1.0 + gamma) * OMEGA3)
    k3p_sq = min(epsilon * OMEGA2 / 4.0, 1.0)
    return ConstantsBundle(
        epsilon=epsilon, gamma=gamma,
        omega1=OMEGA1, omega2=OMEGA2, omega3=OMEGA3,
        c1_sq=c1_sq, c2_sq=c2_sq, c3_sq=c3_sq, A=A, p=c3_sq / c2_sq,
        k1_sq=k1_sq, k3_sq=k3_sq, k1p_sq=k1p_sq, k3p_sq=k3p_sq,
        lambda_split=lambda_split, K_bound=K_bound,
    )


# ---------------------------------------------------------------------------
# distances and functionals
# ---------------------------------------------------------------------------

def _integ(vals: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(vals, x))


def distance_d(state: StatePair) -> float:
    """d(phi,psi) = sqrt( int phi^2 + phi_x^2 + phi_xx^2 + psi^2 dx )."""
    return math.sqrt(_integ(state.phi ** 2 + state.phi_x ** 2
                            + state.phi_xx ** 2 + state.psi ** 2, state.x))


def distance_d1(state: StatePair) -> float:
    """d1: the variant of d without the phi_xx term."""
    return math.sqrt(_integ(state.phi ** 2 + state.phi_x ** 2
                            + state.psi ** 2, state.x))


def lyapunov_V(state: StatePair, gamma: float, epsilon: float) -> float:
    """V = 1/2 int (eps*phi_xx - psi)^2 + gamma*psi^2 + (1+gamma)*phi_x^2 dx."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    core = ((epsilon * state.phi_xx - state.psi) ** 2
            + gamma * state.psi ** 2 + (1.0 + gamma) * state.phi_x ** 2)
    return 0.5 * _integ(core, state.x)


@dataclass(frozen=True)
class PotentialSpec:
    """Restoring-force profile F with F(0)=0 and optional analytic helpers.

    ``F_prime`` and ``antiderivative`` (u -> int_0^u F) may be omitted;
    numeric differencing / fixed-order Gauss-Legendre quadrature are used
    instead.
    """

    F: callable
    F_prime: callable | None = None
    antiderivative: callable | None = None

    def __post_init__(self):
        if abs(self.F(0.0)) > 1e-12:
            raise ValueError("F(0) must vanish")

    def fprime(self, z):
        if self.F_prime is not None:
            return self.F_prime(z)
        h = 1e-6
        z = np.asarray(z, dtype=float)
        return (np.vectorize(self.F)(z + h) - np.vectorize(self.F)(z - h)) / (2 * h)

    def antiderivative_vals(self, u) -> np.ndarray:
        """int_0^{u_i} F(z) dz for each sample, vectorized."""
        u = np.asarray(u, dtype=float)
        if self.antiderivative is not None:
            return np.vectorize(self.antiderivative)(u)
        # 32-node Gauss-Legendre on each [0, u_i]
        nodes, weights = np.polynomial.legendre.leggauss(32)
        half = u / 2.0
        z = half[..., None] * (nodes + 1.0)
        fz = np.vectorize(self.F)(z)
        return half * np.sum(weights * fz, axis=-1)


def lyapunov_W(state: StatePair, gamma: float, epsilon: float,
               pot: PotentialSpec) -> float:
    """W_gamma = V - (1+gamma) * int_0^1 (int_0^phi F) dx."""
    pen = _integ(pot.antiderivative_vals(state.phi), state.x)
    return lyapunov_V(state, gamma, epsilon) - (1.0 + gamma) * pen


def hamiltonian_v(state: StatePair, pot: PotentialSpec) -> float:
    """v = 1/2 int psi^2 + phi_x^2 - 2*int_0^phi F dx."""
    pen = pot.antiderivative_vals(state.phi)
    return 0.5 * _integ(state.psi ** 2 + state.phi_x ** 2 - 2.0 * pen, state.x)


def poincare_check(state: StatePair) -> tuple[float, float]:
    """(int phi_x^2 / int phi^2, int phi_xx^2 / int phi_x^2).

    Both ratios are >= pi^2 for C^2 functions vanishing at the endpoints.
    Raises on a degenerate (zero-denominator) state.
    """
    i0 = _integ(state.phi ** 2, state.x)
    i1 = _integ(state.phi_x ** 2, state.x)
    i2 = _integ(state.phi_xx ** 2, state.x)
    if i0 <= 0 or i1 <= 0:
        raise ValueError("degenerate state: zero denominator in Poincare ratio")
    return i1 / i0, i2 / i1


# ---------------------------------------------------------------------------
# m(.), B(.) and the inverse
# ---------------------------------------------------------------------------

def m_of(pot: PotentialSpec, r: float) -> float:
    """m(r) = max |F'| over [-r, r], by dense sampling with local refinement.

    Slight overestimation (factor 1.001) is deliberate: m enters the
    stability constants and must not be undershot.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0.0:
        return abs(float(pot.fprime(0.0))) * _M_SAFETY
    n = max(33, int(_M_SAMPLES_PER_UNIT * 2 * r) + 1)
    z = np.linspace(-r, r, n)
    vals = np.abs(np.asarray(pot.fprime(z), dtype=float))
    i = int(np.argmax(vals))
    lo = z[max(0, i - 1)]
    hi = z[min(n - 1, i + 1)]
    zf = np.linspace(lo, hi, 4 * max(3, int(_M_SAMPLES_PER_UNIT * (hi - lo))) + 1)
    vf = np.abs(np.asarray(pot.fprime(zf), dtype=float))
    return float(max(vals.max(), vf.max())) * _M_SAFETY


def B_of(pot: PotentialSpec, d: float) -> float:
    """B(d) = sqrt(1 + m(d)) * d."""
    if d < 0:
        raise ValueError("d must be >= 0")
    return math.sqrt(1.0 + m_of(pot, d)) * d


def B_inverse(pot: PotentialSpec, y: float, hi: float = 1.0) -> float:
    """Inverse of the increasing map B, by bracketing and bisection."""
    if y < 0:
        raise ValueError("y must be >= 0")
    if y == 0.0:
        return 0.0
    for _ in range(200):
        if B_of(pot, hi) >= y:
            break
        hi *= 2.0
    else:
        raise ValueError(f"y={y} outside the reachable range of B")
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if B_of(pot, mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
