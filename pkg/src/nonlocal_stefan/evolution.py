"""Time integration of u_t = J*G(u) - G(u), the one-phase and regularized
variants, and a Picard fixed-point solver used as an independent check on
the explicit scheme.

The Baiocchi accumulator is the left-endpoint sum w_k = dt * sum_{j<k} G(u_j),
which is the exact discrete Baiocchi variable of the explicit scheme:
u_k = f + J*w_k - w_k holds at every step up to roundoff.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .grid import Field, Grid, default_eps, integral, l1_norm
from .graph import CANONICAL, ONE_PHASE, GraphSpec
from .kernel import DiscreteKernel, build_kernel, convolve_array

DT_MAX = 0.5


class EvolutionError(RuntimeError):
    pass


class SupportGuardError(EvolutionError):
    pass


class BlowUpError(EvolutionError):
    pass


class PicardError(EvolutionError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    profile: str = "tent"
    radius: float = 1.0

    def build(self, grid: Grid) -> DiscreteKernel:
        return build_kernel(self.profile, self.radius, grid)


@dataclass(frozen=True)
class SimConfig:
    """Settings for one explicit-Euler run.

    ``margin`` is the width (in nodes) of the boundary band where the
    temperature must stay below ``eps``; None means ceil(R_J/h).
    ``stop`` is "horizon" (run to t_end) or "gamma_l1" (also stop once
    ||G(u)||_1 < tol). ``tol=None`` means 1e-8 * (1 + ||f||_1).
    """

    kernel: KernelSpec = KernelSpec()
    graph: GraphSpec = CANONICAL
    dt: float = 0.1
    t_end: float = 10.0
    stride: int = 1
    margin: int | None = None
    stop: str = "horizon"
    tol: float | None = None
    eps: float | None = None
    keep_snapshots: bool = True

    def __post_init__(self):
        if not (0 < self.dt <= DT_MAX):
            raise ValueError(f"dt must lie in (0, {DT_MAX}], got {self.dt}")
        if self.dt * self.graph.lipschitz > 1.0:
            raise ValueError("dt times the graph slope must not exceed 1")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.stop not in ("horizon", "gamma_l1"):
            raise ValueError(f"unknown stopping rule {self.stop!r}")

    def replace(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    def stop_tol(self, f: Field) -> float:
        return self.tol if self.tol is not None else 1e-8 * (1.0 + l1_norm(f))

    def support_eps(self, f: Field) -> float:
        return self.eps if self.eps is not None else default_eps(f)

    def guard_margin(self, kernel: DiscreteKernel) -> int:
        need = int(math.ceil(kernel.radius / kernel.spacing - 1e-9))
        if self.margin is None:
            return need
        if self.margin < need:
            raise ValueError(f"margin {self.margin} is below ceil(R_J/h) = {need}")
        return self.margin

    def to_dict(self) -> dict:
        return {"kernel": {"profile": self.kernel.profile, "radius": self.kernel.radius},
                "graph": self.graph.to_dict(), "dt": self.dt, "t_end": self.t_end,
                "stride": self.stride, "margin": self.margin, "stop": self.stop,
                "tol": self.tol, "eps": self.eps}


@dataclass
class Diagnostics:
    t: float
    mass: float
    linf: float
    l1_gamma: float
    supp_plus_count: int
    supp_minus_count: int


DIAG_HEADER = ["t", "mass", "linf", "l1_gamma", "supp_plus_count", "supp_minus_count"]


@dataclass
class Trajectory:
    grid: Grid
    f: Field
    kernel: DiscreteKernel
    graph: GraphSpec
    dt: float
    times: list = dc_field(default_factory=list)
    steps: list = dc_field(default_factory=list)
    u: list = dc_field(default_factory=list)
    w: list = dc_field(default_factory=list)
    diagnostics: list = dc_field(default_factory=list)
    stopped_by: str = "horizon"
    eps: float = 0.0

    @property
    def final(self) -> Field:
        return Field(self.grid, self.u[-1])

    @property
    def final_w(self) -> Field:
        return Field(self.grid, self.w[-1])

    def snapshot(self, k: int) -> Field:
        return Field(self.grid, self.u[k])

    def temperature(self, k: int) -> np.ndarray:
        return self.graph(self.u[k])

    def at(self, t: float) -> Field:
        """Snapshot recorded at time ``t`` (within half a step)."""
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 0.5 * self.dt:
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshot(k)

    def __len__(self) -> int:
        return len(self.times)

    def diagnostics_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(DIAG_HEADER)
        for d in self.diagnostics:
            wr.writerow([repr(d.t), repr(d.mass), repr(d.linf), repr(d.l1_gamma),
                         d.supp_plus_count, d.supp_minus_count])
        return buf.getvalue()


def boundary_band(shape: tuple[int, ...], margin: int) -> np.ndarray:
    band = np.zeros(shape, dtype=bool)
    for ax, n in enumerate(shape):
        idx = [slice(None)] * len(shape)
        idx[ax] = slice(0, min(margin, n))
        band[tuple(idx)] = True
        idx[ax] = slice(max(n - margin, 0), n)
        band[tuple(idx)] = True
    return band


def _guard(v: np.ndarray, band: np.ndarray, eps: float) -> None:
    if np.any(np.abs(v[band]) > eps):
        raise SupportGuardError("domain too small: support reached boundary margin")


def step_explicit(u: Field, kernel: DiscreteKernel, graph: GraphSpec = CANONICAL,
                  dt: float = 0.1, margin: int | None = None,
                  eps: float | None = None) -> Field:
    """One explicit Euler step u + dt (J*G(u) - G(u))."""
    if not (0 < dt <= DT_MAX):
        raise ValueError(f"dt must lie in (0, {DT_MAX}]")
    v = graph(u.values)
    m = margin if margin is not None else int(math.ceil(kernel.radius / kernel.spacing - 1e-9))
    _guard(v, boundary_band(u.grid.shape, m), eps if eps is not None else default_eps(u))
    out = u.values + dt * (convolve_array(kernel, v) - v)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("blow-up: reduce dt")
    return Field(u.grid, out)


def _diag(t: float, u: np.ndarray, v: np.ndarray, grid: Grid, eps: float) -> Diagnostics:
    uf = Field(grid, u)
    vf = Field(grid, v)
    return Diagnostics(t, integral(uf), float(np.max(np.abs(u))), l1_norm(vf),
                       int(np.count_nonzero(v > eps)), int(np.count_nonzero(v < -eps)))


def integrate(f: Field, config: SimConfig, kernel: DiscreteKernel | None = None,
              graph: GraphSpec | None = None, monitor=None) -> Trajectory:
    """Explicit Euler from ``f`` up to ``config.t_end`` (or the stopping rule).

    ``monitor(k, t, u, v)``, if given, sees every step (including k = 0)
    whatever the snapshot stride.
    """
    kernel = kernel or config.kernel.build(f.grid)
    graph = graph or config.graph
    grid = f.grid
    dt = config.dt
    eps = config.support_eps(f)
    band = boundary_band(grid.shape, config.guard_margin(kernel))
    if np.any(np.abs(f.values[band]) > eps):
        raise SupportGuardError("domain too small: initial support inside boundary margin")
    tol = config.stop_tol(f)
    n_steps = int(round(config.t_end / dt))
    cell = grid.cell_volume

    traj = Trajectory(grid, f, kernel, graph, dt, eps=eps)
    u = np.array(f.values, dtype=float)
    w = np.zeros_like(u)
    v = graph(u)

    def record(k):
        t = k * dt
        traj.times.append(t)
        traj.steps.append(k)
        if config.keep_snapshots or not traj.u:
            traj.u.append(u.copy())
            traj.w.append(w.copy())
        else:
            traj.u[-1] = u.copy()
            traj.w[-1] = w.copy()
        traj.diagnostics.append(_diag(t, u, v, grid, eps))

    record(0)
    if monitor is not None:
        monitor(0, 0.0, u, v)
    k = 0
    while True:
        if config.stop == "gamma_l1" and cell * float(np.abs(v).sum()) < tol:
            traj.stopped_by = "tol"
            break
        if k >= n_steps:
            break
        if v.any():
            _guard(v, band, eps)
            u = u + dt * (convolve_array(kernel, v) - v)
            w = w + dt * v
            if not np.all(np.isfinite(u)):
                raise BlowUpError("blow-up: reduce dt")
            v = graph(u)
        k += 1
        if monitor is not None:
            monitor(k, k * dt, u, v)
        if k % config.stride == 0:
            record(k)
    if traj.steps[-1] != k:
        record(k)
    return traj


def integrate_one_phase(f: Field, config: SimConfig,
                        kernel: DiscreteKernel | None = None) -> Trajectory:
    """Same scheme with G(s) = (s - 1)_+ ; requires f >= 0."""
    if np.any(f.values < 0):
        raise ValueError("one-phase data must be nonnegative")
    return integrate(f, config, kernel, ONE_PHASE)


def integrate_regularized(f: Field, config: SimConfig, n: int,
                          kernel: DiscreteKernel | None = None) -> Trajectory:
    return integrate(f, config, kernel, GraphSpec("regularized", n=n))


@dataclass
class PicardResult:
    u: Field
    times: np.ndarray
    distances: list
    iterations: int

    @property
    def contraction_ratios(self) -> list:
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]


def picard_solve(f: Field, kernel: DiscreteKernel, graph: GraphSpec = CANONICAL,
                 t0: float = 0.4, tol: float = 1e-12, inner_dt: float = 2.5e-4,
                 max_iter: int = 200) -> PicardResult:
    """Fixed point of (T u)(t) = f + int_0^t (J*G(u) - G(u)) ds on [0, t0].

    The time integral uses the trapezoid rule on a uniform inner mesh no
    coarser than ``inner_dt``; iteration stops when the sup-over-time L1
    distance between successive iterates drops below ``tol``.
    """
    if not (0 < t0 < 0.5):
        raise ValueError("need 0 < t0 < 1/2 for the Picard map to contract")
    m = int(math.ceil(t0 / inner_dt - 1e-9))
    tau = t0 / m
    times = np.arange(m + 1) * tau
    base = np.asarray(f.values, dtype=float)
    cell = f.grid.cell_volume
    U = np.broadcast_to(base, (m + 1,) + base.shape).copy()
    distances = []
    for it in range(1, max_iter + 1):
        V = graph(U)
        if V.any():
            F = np.stack([convolve_array(kernel, V[j]) for j in range(m + 1)]) - V
        else:
            F = np.zeros_like(U)
        incr = 0.5 * tau * (F[:-1] + F[1:])
        new = np.empty_like(U)
        new[0] = base
        new[1:] = base + np.cumsum(incr, axis=0)
        axes = tuple(range(1, U.ndim))
        dist = float(np.max(cell * np.abs(new - U).sum(axis=axes)))
        U = new
        distances.append(dist)
        if dist < tol:
            return PicardResult(Field(f.grid, U[-1]), times, distances, it)
    raise PicardError(f"Picard iteration did not converge in {max_iter} iterations "
                      f"(last distance {distances[-1]:.3e})")


def support_radius_bound(f: Field, kernel: DiscreteKernel, t: float,
                         eps: float | None = None) -> float:
    """A-priori radius (from the origin) containing supp u(t).

    Uses supp u(t) within supp f + n B_{R_J}, n = floor(t/t0) + 1, with
    t0 = 1 / (sup J * ||G(f)||_1).
    """
    from .kernel import kernel_sup

    eps = eps if eps is not None else default_eps(f)
    mask = np.abs(f.values) > eps
    if not mask.any():
        return 0.0
    base = float(np.max(f.grid.radius()[mask]))
    g1 = l1_norm(Field(f.grid, CANONICAL(f.values)))
    if g1 == 0:
        return base
    t0 = 1.0 / (kernel_sup(kernel) * g1)
    return base + (math.floor(t / t0) + 1) * kernel.radius


__all__ = ["BlowUpError", "DT_MAX", "Diagnostics", "EvolutionError", "KernelSpec",
           "PicardError", "PicardResult", "SimConfig", "SupportGuardError", "Trajectory",
           "boundary_band", "integrate", "integrate_one_phase", "integrate_regularized",
           "picard_solve", "step_explicit", "support_radius_bound"]
