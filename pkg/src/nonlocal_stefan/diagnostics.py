"""Discrete checks of the structural properties of solutions: support growth,
retention, L1 contraction, subcaloric temperature, conservation, sup bound and
the comparison sandwich. Every check is a pure function of recorded
trajectories and returns a :class:`Report` instead of raising."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .evolution import Trajectory
from .graph import CANONICAL
from .grid import Field, default_eps, dilate, integral, l1_distance, l1_norm, positive_l1
from .kernel import DiscreteKernel, convolve_array, kernel_sup

MAX_LISTED = 50


@dataclass
class Report:
    check: str
    passed: bool = True
    violations: list = dc_field(default_factory=list)
    count: int = 0
    skipped: str | None = None

    @classmethod
    def skip(cls, check: str, reason: str) -> "Report":
        return cls(check, skipped=reason)

    def add(self, t, node, lhs, rhs):
        self.passed = False
        self.count += 1
        if len(self.violations) < MAX_LISTED:
            self.violations.append({"t": float(t), "node": _node(node),
                                    "lhs": float(lhs), "rhs": float(rhs)})

    def to_dict(self) -> dict:
        out = {"check": self.check, "pass": self.passed, "violations": self.violations}
        if self.skipped:
            out["skipped"] = self.skipped
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __bool__(self):
        return self.passed


def _node(idx):
    idx = np.atleast_1d(idx)
    return int(idx[0]) if idx.size == 1 else [int(i) for i in idx]


def _record_mask(report, t, bad, lhs, rhs):
    for idx in np.argwhere(bad)[:MAX_LISTED]:
        i = tuple(idx)
        report.add(t, idx, lhs[i], rhs[i] if np.ndim(rhs) else rhs)
    report.count += max(0, int(bad.sum()) - min(int(bad.sum()), MAX_LISTED))


@dataclass
class SupportBound:
    """Growth bound for supports of u(t) and G(u(t)) (``stationary`` when G(f) = 0)."""

    c0: float
    t0: float
    base: np.ndarray
    radius: float
    stationary: bool = False

    def n_u(self, t: float) -> int:
        return 1 if self.stationary else math.floor(t / self.t0) + 1

    def n_gamma(self, t: float) -> int:
        return 0 if self.stationary else math.floor(t / self.t0)


def support_bound(f: Field, kernel: DiscreteKernel, eps: float | None = None) -> SupportBound:
    """c0 = sup J * ||G(f)||_1 and t0 = 1/c0."""
    eps = eps if eps is not None else default_eps(f)
    base = np.abs(f.values) > eps
    g1 = l1_norm(Field(f.grid, CANONICAL(f.values)))
    if g1 == 0:
        return SupportBound(0.0, math.inf, base, kernel.radius, stationary=True)
    c0 = kernel_sup(kernel) * g1
    return SupportBound(c0, 1.0 / c0, base, kernel.radius)


def check_support_growth(traj: Trajectory, bound: SupportBound,
                         eps: float | None = None) -> Report:
    eps = eps if eps is not None else traj.eps
    rep = Report("support_growth")
    grid = traj.grid
    cache = {}

    def allowed(n):
        if n not in cache:
            cache[n] = dilate(bound.base, n * bound.radius, grid)
        return cache[n]

    for t, u in zip(traj.times, traj.u):
        mu = np.abs(u) > eps
        au = allowed(bound.n_u(t))
        bad = mu & ~au
        if bad.any():
            _record_mask(rep, t, bad, np.abs(u), eps)
        v = traj.graph(u)
        mv = np.abs(v) > eps
        bad = mv & ~allowed(bound.n_gamma(t))
        if bad.any():
            _record_mask(rep, t, bad, np.abs(v), eps)
    return rep


def check_retention(traj: Trajectory, eps: float | None = None,
                    tol: float | None = None) -> Report:
    """Nested growth of the signed temperature supports, plus the
    exponential lower bound v_+(t) >= exp(-(t - s)) v_+(s) - tol.

    A node counted in the support at time s (|v| > eps) must still carry
    the same sign at every later snapshot; the exponential bound is checked
    between consecutive snapshots and from t = 0, on the nodes where J*v
    stayed nonnegative (resp. nonpositive) over the interval.
    """
    eps = eps if eps is not None else traj.eps
    rep = Report("retention")
    temps = [traj.graph(u) for u in traj.u]
    if tol is None:
        vmax = max(float(np.max(np.abs(v))) for v in temps)
        tol = 1e-8 + 2 * traj.dt * vmax
    conv = [convolve_array(traj.kernel, v) for v in temps]
    times = traj.times
    for sign in (1.0, -1.0):
        signed = [np.maximum(sign * v, 0.0) for v in temps]
        # nested masks
        for k in range(1, len(times)):
            was = signed[k - 1] > eps
            bad = was & ~(signed[k] > 0)
            if bad.any():
                _record_mask(rep, times[k], bad, signed[k], 0.0)
        # exponential bound, from t=0 and step to step
        ok_from0 = np.ones(traj.grid.shape, dtype=bool)
        for k in range(1, len(times)):
            ok_step = (sign * conv[k - 1] >= 0) & (sign * conv[k] >= 0)
            ok_from0 &= sign * conv[k - 1] >= 0
            for s_idx, window in ((k - 1, ok_step), (0, ok_from0 & (sign * conv[k] >= 0))):
                rhs = math.exp(-(times[k] - times[s_idx])) * signed[s_idx] - tol
                bad = window & (signed[k] < rhs)
                if bad.any():
                    _record_mask(rep, times[k], bad, signed[k], rhs)
    return rep


@dataclass
class ContractionSeries:
    times: list
    l1: list
    positive: list

    def nonincreasing(self, slack: float = 1e-10) -> bool:
        return all(b <= a + slack for s in (self.l1, self.positive) for a, b in zip(s, s[1:]))

    def report(self, slack: float = 1e-10) -> Report:
        rep = Report("contraction")
        for name, s in (("l1", self.l1), ("positive", self.positive)):
            for k in range(1, len(s)):
                if s[k] > s[k - 1] + slack:
                    rep.add(self.times[k], -1, s[k], s[k - 1])
        return rep


def monitor_contraction(a: Trajectory, b: Trajectory) -> ContractionSeries:
    if a.grid != b.grid or not np.allclose(a.times, b.times):
        raise ValueError("trajectories must share grid and snapshot times")
    l1, pos = [], []
    for ua, ub in zip(a.u, b.u):
        fa, fb = Field(a.grid, ua), Field(a.grid, ub)
        l1.append(l1_distance(fa, fb))
        pos.append(positive_l1(fa, fb))
    return ContractionSeries(list(a.times), l1, pos)


def check_mass(traj: Trajectory, rel: float = 1e-11) -> Report:
    rep = Report("mass_conservation")
    m0 = integral(traj.f)
    scale = max(1.0, abs(m0))
    for d in traj.diagnostics:
        if abs(d.mass - m0) > rel * scale:
            rep.add(d.t, -1, d.mass, m0)
    return rep


def check_sup_bound(traj: Trajectory, slack: float = 1e-12) -> Report:
    rep = Report("linf_bound")
    bound = traj.f.sup_norm() + slack
    for d in traj.diagnostics:
        if d.linf > bound:
            rep.add(d.t, -1, d.linf, bound)
    return rep


def check_subcaloric(traj: Trajectory, C: float = 0.0, slack: float = 1e-12) -> Report:
    """(chi_{k+1} - chi_k)/dt <= J*chi_k - chi_k + C dt for chi in
    {G(u)_+, G(u)_-, |G(u)|}; needs snapshots at every step.

    The explicit scheme satisfies this with C = 0 whenever dt <= 1.
    """
    rep = Report("subcaloric")
    steps = traj.steps
    if any(b - a != 1 for a, b in zip(steps, steps[1:])):
        raise ValueError("subcaloric check needs a stride-1 trajectory")
    dt = traj.dt
    temps = [traj.graph(u) for u in traj.u]
    parts = (lambda v: np.maximum(v, 0.0), lambda v: np.maximum(-v, 0.0), np.abs)
    for k in range(len(temps) - 1):
        for part in parts:
            chi0, chi1 = part(temps[k]), part(temps[k + 1])
            lhs = (chi1 - chi0) / dt
            rhs = convolve_array(traj.kernel, chi0) - chi0 + C * dt + slack
            bad = lhs > rhs
            if bad.any():
                _record_mask(rep, traj.times[k + 1], bad, lhs, rhs)
    return rep


def check_sandwich(traj: Trajectory, plus: Trajectory, minus: Trajectory,
                   slack: float = 1e-10) -> Report:
    """-U^-(t) <= -u_-(t) <= u(t) <= u_+(t) <= U^+(t) nodewise."""
    rep = Report("comparison_sandwich")
    for t, u, up, um in zip(traj.times, traj.u, plus.u, minus.u):
        upos, uneg = np.maximum(u, 0.0), np.maximum(-u, 0.0)
        bad = (upos > up + slack) | (uneg > um + slack)
        if bad.any():
            _record_mask(rep, t, bad, np.abs(u), np.maximum(up, um))
    return rep


__all__ = ["ContractionSeries", "Report", "SupportBound", "check_mass", "check_retention",
           "check_sandwich", "check_sup_bound", "check_subcaloric", "check_support_growth",
           "monitor_contraction", "support_bound"]
