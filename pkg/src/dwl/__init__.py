"""Numerical laboratory for the third-order dissipative wave equation

    -eps * u_xxt - c^2 * u_xx + u_tt = f(x, t, u, u_x, u_xx, u_t)

on the unit interval with Dirichlet data: kernel evaluation, a
Picard/Green's-function solver, an independent finite-difference oracle,
Liapunov functionals, comparison-principle ODE lemmas and end-to-end
stability experiments.
"""

__version__ = "0.1.0"

from .core_model import (
    ProblemSpec,
    GridFunction,
    StatePair,
    rescale_unit_wavespeed,
    homogenize_boundaries,
    perturbation_spec,
)
from .kernels import KernelParams, KernelEval, ThetaSeries
from .fdsolver import FDConfig, solve_fd, manufactured_forcing, convergence_study
from .picard import PicardConfig, SegmentReport, solve_picard
from .functionals import (
    ConstantsBundle,
    PotentialSpec,
    distance_d,
    distance_d1,
    lyapunov_V,
    lyapunov_W,
    hamiltonian_v,
    compute_constants,
    poincare_check,
)
from .comparison import AveragedHypotheses, LemmaConstants
from .forcing import SpikeFamily, spike_value, spike_integral, spike_hypothesis_constants
from .scenarios import StabilityReport

__all__ = [
    "ProblemSpec",
    "GridFunction",
    "StatePair",
    "rescale_unit_wavespeed",
    "homogenize_boundaries",
    "perturbation_spec",
    "KernelParams",
    "KernelEval",
    "ThetaSeries",
    "FDConfig",
    "solve_fd",
    "manufactured_forcing",
    "convergence_study",
    "PicardConfig",
    "SegmentReport",
    "solve_picard",
    "ConstantsBundle",
    "PotentialSpec",
    "distance_d",
    "distance_d1",
    "lyapunov_V",
    "lyapunov_W",
    "hamiltonian_v",
    "compute_constants",
    "poincare_check",
    "AveragedHypotheses",
    "LemmaConstants",
    "SpikeFamily",
    "spike_value",
    "spike_integral",
    "spike_hypothesis_constants",
    "StabilityReport",
]
