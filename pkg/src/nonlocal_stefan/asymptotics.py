"""Large-time limits: the one-phase projection P, the nonlocal biobstacle
problem (by long-time integration and by a direct projected sweep), the
non-interaction test and decomposition, and the general-data dispatch."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import impl
from .evolution import SimConfig, Trajectory, integrate, integrate_one_phase
from .graph import CANONICAL, ONE_PHASE, GraphSpec
from .grid import Field, default_eps, integral, l1_distance, l1_norm, set_distance
from .kernel import DiscreteKernel, convolve_array


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []


class HypothesisError(ValueError):
    pass


def run_to_rest(f: Field, config: SimConfig, graph: GraphSpec | None = None,
                kernel: DiscreteKernel | None = None, monitor=None) -> Trajectory:
    """Integrate until ||G(u)||_1 < tol, keeping only the final state.

    Raises ConvergenceError if the horizon ``config.t_end`` runs out first.
    """
    cfg = config.replace(stop="gamma_l1", keep_snapshots=False,
                         stride=max(1, int(round(config.t_end / config.dt))) + 1)
    traj = integrate(f, cfg, kernel, graph, monitor=monitor)
    if traj.stopped_by != "tol":
        res = traj.diagnostics[-1].l1_gamma
        raise ConvergenceError(
            f"horizon t={config.t_end} exhausted before ||G(u)||_1 < {cfg.stop_tol(f):.3e} "
            f"(reached {res:.3e})", residual=res)
    return traj


def project_one_phase(f: Field, config: SimConfig,
                      kernel: DiscreteKernel | None = None) -> Field:
    """Pf for nonnegative data: the rest state of the one-phase problem."""
    if np.any(f.values < 0):
        raise ValueError("one-phase projection needs nonnegative data")
    if f.sup_norm() <= 1.0:
        return f
    return run_to_rest(f, config, ONE_PHASE, kernel).final


@dataclass
class BopResult:
    w_inf: Field
    f_tilde: Field
    complementarity: float
    bound: float
    fixed_point: float
    method: str
    iterations: int = 0

    @property
    def residuals(self) -> dict:
        return {"complementarity": self.complementarity, "bound": self.bound,
                "fixed_point": self.fixed_point}

    def to_json(self, w_inf_file: str | None = None, f_tilde_file: str | None = None) -> str:
        return json.dumps({"method": self.method, "residuals": self.residuals,
                           "iterations": self.iterations, "w_inf_file": w_inf_file,
                           "f_tilde_file": f_tilde_file})


def recover(f: Field, w: Field, kernel: DiscreteKernel) -> Field:
    """f + J*w - w."""
    return Field(f.grid, f.values + convolve_array(kernel, w.values) - w.values)


def complementarity_residual(w: np.ndarray, f_tilde: np.ndarray) -> float:
    """max over nodes of min(|w|, |f~ - sign w|) where w != 0 and (|f~| - 1)_+
    where w == 0."""
    sw = np.sign(w)
    on = sw != 0
    r = np.where(on, np.minimum(np.abs(w), np.abs(f_tilde - sw)),
                 np.maximum(np.abs(f_tilde) - 1.0, 0.0))
    return float(np.max(r)) if r.size else 0.0


def _bop_result(f, w, kernel, fixed_point, method, iterations) -> BopResult:
    wf = Field(f.grid, w)
    ft = recover(f, wf, kernel)
    bound = float(np.max(np.maximum(np.abs(ft.values) - 1.0, 0.0)))
    return BopResult(wf, ft, complementarity_residual(w, ft.values), bound,
                     fixed_point, method, iterations)


def solve_bop_time(f: Field, config: SimConfig, kernel: DiscreteKernel | None = None,
                   check: bool = True) -> BopResult:
    """BOP solution as the Baiocchi limit of the two-phase evolution.

    With ``check`` the data must be one-signed or have non-interacting
    temperatures (see :func:`check_noninteraction`).
    """
    kernel = kernel or config.kernel.build(f.grid)
    if f.sup_norm() <= 1.0:
        return _bop_result(f, np.zeros(f.grid.shape), kernel, 0.0, "time-integration", 0)
    if check:
        inter = check_noninteraction(f, kernel, config)
        if inter.level == "none":
            raise HypothesisError("phases interact: BOP theory not applicable")
    traj = run_to_rest(f, config, CANONICAL, kernel)
    res = _bop_result(f, traj.w[-1], kernel, 0.0, "time-integration", traj.steps[-1])
    gap = l1_distance(res.f_tilde, traj.final)
    slack = 1e-9 * (1.0 + l1_norm(f))
    if gap > slack:
        raise RuntimeError(f"u = f + J*w - w violated by {gap:.3e} > {slack:.3e}")
    res.fixed_point = gap
    return res


def solve_bop_direct(f: Field, kernel: DiscreteKernel, sweeps: int = 200_000,
                     tol: float = 1e-12, forward: bool = True, backend=None) -> BopResult:
    """Projected nodewise relaxation for the biobstacle system.

    At node i (others frozen) solve f_i + (J*w)_i - w_i = +1 and keep it if
    w_i > 0, else solve for -1 and keep it if w_i < 0, else set w_i = 0.
    Sweeps repeat until the largest update is below ``tol``.
    """
    be = backend or impl
    fv = np.ascontiguousarray(f.values, dtype=np.float64)
    w = np.zeros_like(fv)
    history = []
    for it in range(1, sweeps + 1):
        if kernel.dim == 1:
            upd = be.bop_sweep_1d(kernel.mass, kernel.half, fv, w, forward)
        else:
            upd = be.bop_sweep_2d(kernel.mass, kernel.offsets, kernel.centre, fv, w, forward)
        history.append(upd)
        if upd < tol:
            return _bop_result(f, w, kernel, upd, "direct-sweep", it)
    raise ConvergenceError(f"direct sweep did not converge in {sweeps} sweeps "
                           f"(last update {history[-1]:.3e})", residual=history[-1],
                           history=history[-20:])


@dataclass
class Interaction:
    level: str
    temperature_distance: float
    enthalpy_distance: float
    p_plus: Field
    p_minus: Field
    w_plus: Field
    w_minus: Field

    def at_least(self, level: str) -> bool:
        order = {"none": 0, "temperature": 1, "strong": 2}
        return order[self.level] >= order[level]


def _rest_pair(g: Field, config, kernel):
    if g.sup_norm() <= 1.0:
        return g, Field.zeros(g.grid)
    traj = run_to_rest(g, config, ONE_PHASE, kernel)
    return traj.final, traj.final_w


def check_noninteraction(f: Field, kernel: DiscreteKernel, config: SimConfig) -> Interaction:
    """Classify how the two phases of ``f`` can interact.

    The temperature region of a one-phase projection is the support of its
    Baiocchi limit (every node where the temperature was ever positive).
    ``strong``: enthalpy supports of Pf+ and Pf- farther apart than 2 R_J;
    ``temperature``: temperature regions at least R_J apart; else ``none``.
    """
    eps = config.support_eps(f)
    fp, fm = f.positive_part(), f.negative_part()
    pp, wp = _rest_pair(fp, config, kernel)
    pm, wm = _rest_pair(fm, config, kernel)
    d_temp = set_distance(wp.values > eps, wm.values > eps, f.grid)
    d_enth = set_distance(pp.values > eps, pm.values > eps, f.grid)
    # rounding slack in the direction of each inequality: ">= R_J" admits a
    # lattice distance equal to R_J, "> 2 R_J" rejects one equal to 2 R_J
    if d_enth > 2 * kernel.radius * (1 + 1e-9):
        level = "strong"
    elif d_temp >= kernel.radius * (1 - 1e-9):
        level = "temperature"
    else:
        level = "none"
    return Interaction(level, d_temp, d_enth, pp, pm, wp, wm)


def decompose_noninteracting(f: Field, config: SimConfig,
                             kernel: DiscreteKernel | None = None,
                             interaction: Interaction | None = None) -> Trajectory:
    """Predicted solution U+(t) - U-(t) from two one-phase runs.

    Without ``interaction`` the check runs with ``config``, whose horizon
    must then be long enough for both projections to settle.
    """
    kernel = kernel or config.kernel.build(f.grid)
    inter = interaction or check_noninteraction(f, kernel, config)
    if inter.level != "strong":
        raise HypothesisError(f"decomposition needs strongly separated phases, got {inter.level}")
    cfg = config.replace(stop="horizon")
    plus = integrate_one_phase(f.positive_part(), cfg, kernel)
    minus = integrate_one_phase(f.negative_part(), cfg, kernel)
    out = Trajectory(f.grid, f, kernel, CANONICAL, config.dt, eps=plus.eps)
    out.times = list(plus.times)
    out.steps = list(plus.steps)
    out.u = [a - b for a, b in zip(plus.u, minus.u)]
    out.w = [a - b for a, b in zip(plus.w, minus.w)]
    out.diagnostics = plus.diagnostics  # per-phase diagnostics are not meaningful here
    out.stopped_by = plus.stopped_by
    return out


@dataclass
class GeneralProjection:
    field: Field
    route: str
    resolved: bool
    loss_time: float | None = None


def first_loss(monitor_state: dict):
    def monitor(k, t, u, v):
        if monitor_state.get("time") is None:
            if np.min(u) >= -1.0:
                monitor_state["time"], monitor_state["phase"] = t, "negative"
                monitor_state["state"] = u.copy()
            elif np.max(u) <= 1.0:
                monitor_state["time"], monitor_state["phase"] = t, "positive"
                monitor_state["state"] = u.copy()
    return monitor


def project_general(f: Field, config: SimConfig,
                    kernel: DiscreteKernel | None = None) -> GeneralProjection:
    """Large-time limit for general data.

    Non-interacting data go through the biobstacle problem. Otherwise the
    evolution is run until it comes to rest, noting when one phase drops
    out (min u >= -1 or max u <= 1), after which the dynamics are one-phase.
    If neither happens within the horizon the last iterate is returned with
    ``resolved=False``.
    """
    kernel = kernel or config.kernel.build(f.grid)
    if f.sup_norm() <= 1.0:
        return GeneralProjection(f, "mushy", True, 0.0)
    try:
        inter = check_noninteraction(f, kernel, config)
    except ConvergenceError:
        inter = None  # projections did not settle: treat the phases as interacting
    if inter is not None and inter.at_least("temperature"):
        res = solve_bop_time(f, config, kernel, check=False)
        return GeneralProjection(res.f_tilde, "bop", True)
    state: dict = {}
    try:
        traj = run_to_rest(f, config, CANONICAL, kernel, monitor=first_loss(state))
    except ConvergenceError:
        traj = integrate(f, config.replace(stop="horizon", keep_snapshots=False,
                                           stride=max(1, int(round(config.t_end / config.dt)))),
                         kernel, CANONICAL, monitor=first_loss(state))
        if state.get("time") is None:
            return GeneralProjection(traj.final, "unresolved", False)
        return GeneralProjection(traj.final, "phase-loss", False, state["time"])
    route = "phase-loss" if state.get("time") is not None else "converged"
    return GeneralProjection(traj.final, route, True, state.get("time"))


__all__ = ["BopResult", "ConvergenceError", "GeneralProjection", "HypothesisError",
           "Interaction", "check_noninteraction", "complementarity_residual",
           "decompose_noninteracting", "project_general", "project_one_phase", "recover",
           "run_to_rest", "solve_bop_direct", "solve_bop_time"]
