"""Simulation and verification toolkit for the nonlocal two-phase Stefan
problem u_t = J*G(u) - G(u), with G(u) = sign(u) (|u| - 1)_+ .

The hot loops (convolution and the biobstacle sweep) come from a compiled
extension when it is available and from a numpy/pure-Python fallback
otherwise; set NONLOCAL_STEFAN_PURE=1 to force the fallback.
"""
from ._backend import NAME as BACKEND
from .asymptotics import (BopResult, ConvergenceError, HypothesisError, check_noninteraction,
                          decompose_noninteracting, project_general, project_one_phase,
                          solve_bop_direct, solve_bop_time)
from .evolution import (KernelSpec, SimConfig, SupportGuardError, Trajectory, integrate,
                        integrate_one_phase, integrate_regularized, picard_solve, step_explicit)
from .graph import CANONICAL, ONE_PHASE, GraphParams, GraphSpec, gamma, gamma_n
from .grid import Field, Grid, integral, l1_distance, l1_norm
from .kernel import DiscreteKernel, build_kernel, convolve
from .phaseloss import PhaseLossReport, asymptotic_after_loss, criterion, kappa_of

__version__ = "0.1.0"

__all__ = ["BACKEND", "BopResult", "CANONICAL", "ConvergenceError", "DiscreteKernel", "Field",
           "GraphParams", "GraphSpec", "Grid", "HypothesisError", "KernelSpec", "ONE_PHASE",
           "PhaseLossReport", "SimConfig", "SupportGuardError", "Trajectory",
           "asymptotic_after_loss", "build_kernel", "check_noninteraction", "convolve",
           "criterion", "decompose_noninteracting", "gamma", "gamma_n", "integral", "integrate",
           "integrate_one_phase", "integrate_regularized", "kappa_of", "l1_distance", "l1_norm",
           "picard_solve", "project_general", "project_one_phase", "solve_bop_direct",
           "solve_bop_time", "step_explicit"]
