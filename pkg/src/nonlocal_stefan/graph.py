"""The monotone enthalpy-temperature graph: canonical, general piecewise
linear, regularized, and one-phase forms. All maps act elementwise on
scalars or arrays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    pass


def gamma(s):
    """sign(s) * (|s| - 1)_+ ; zero exactly on [-1, 1]."""
    s = np.asarray(s, dtype=float)
    # + 0.0 turns the -0.0 produced on (-1, 0) into +0.0
    return np.sign(s) * np.maximum(np.abs(s) - 1.0, 0.0) + 0.0


def one_phase(s):
    """(s - 1)_+ , the graph of the one-phase problem."""
    return np.maximum(np.asarray(s, dtype=float) - 1.0, 0.0)


def gamma_n(s, n: int):
    """Strictly increasing Lipschitz approximation of ``gamma``.

    s + 1 below -(n+1)/n, s/(n+1) in between, s - 1 above (n+1)/n. The
    branches meet at the breakpoints (both give +-1/n there) and
    sup |gamma_n - gamma| = 1/(n+1).
    """
    if n < 1:
        raise GraphError("n must be a positive integer")
    s = np.asarray(s, dtype=float)
    b = (n + 1) / n
    return np.where(s < -b, s + 1.0, np.where(s > b, s - 1.0, s / (n + 1)))


@dataclass(frozen=True)
class GraphParams:
    """Latent-heat interval [e1, e2] and phase slopes c1 (s < e1), c2 (s > e2)."""

    e1: float = -1.0
    e2: float = 1.0
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if not (self.e1 < 0 < self.e2):
            raise GraphError(f"need e1 < 0 < e2, got e1={self.e1}, e2={self.e2}")
        if not (self.c1 > 0 and self.c2 > 0):
            raise GraphError(f"need c1, c2 > 0, got c1={self.c1}, c2={self.c2}")


def gamma_general(s, p: GraphParams):
    s = np.asarray(s, dtype=float)
    return np.where(s < p.e1, p.c1 * (s - p.e1),
                    np.where(s > p.e2, p.c2 * (s - p.e2), 0.0)) + 0.0


@dataclass(frozen=True)
class UnitChange:
    """Per-phase rescaling that carries a general graph onto ``gamma``.

    On the positive phase u = u_pos * U and v = v_pos * V, on the negative
    phase u = u_neg * U and v = v_neg * V, where V = gamma(U).
    """

    u_pos: float
    v_pos: float
    u_neg: float
    v_neg: float

    def to_canonical(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, u / self.u_pos, u / self.u_neg)

    def from_canonical(self, U):
        U = np.asarray(U, dtype=float)
        return np.where(U >= 0, U * self.u_pos, U * self.u_neg)

    def temperature(self, u):
        """Evaluate the general graph through the canonical one."""
        U = self.to_canonical(u)
        V = gamma(U)
        return np.where(U >= 0, V * self.v_pos, V * self.v_neg)

    @property
    def is_identity(self) -> bool:
        return self.u_pos == self.v_pos == self.u_neg == self.v_neg == 1.0


def normalize_units(p: GraphParams) -> UnitChange:
    # s > e2:  c2 (s - e2) = c2 e2 (s/e2 - 1);  s < e1: c1 (s - e1) = c1 |e1| (s/|e1| + 1)
    return UnitChange(u_pos=p.e2, v_pos=p.c2 * p.e2, u_neg=-p.e1, v_neg=p.c1 * -p.e1)


@dataclass(frozen=True)
class GraphSpec:
    """Selects which graph the evolution uses.

    kind: "canonical", "general" (with ``params``), "regularized" (with
    ``n``) or "one-phase".
    """

    kind: str = "canonical"
    params: GraphParams | None = None
    n: int | None = None

    def __post_init__(self):
        if self.kind not in ("canonical", "general", "regularized", "one-phase"):
            raise GraphError(f"unknown graph kind {self.kind!r}")
        if self.kind == "general" and self.params is None:
            raise GraphError("general graph needs params")
        if self.kind == "regularized" and (self.n is None or self.n < 1):
            raise GraphError("regularized graph needs n >= 1")

    def __call__(self, s):
        if self.kind == "canonical":
            return gamma(s)
        if self.kind == "one-phase":
            return one_phase(s)
        if self.kind == "general":
            return gamma_general(s, self.params)
        return gamma_n(s, self.n)

    @property
    def mushy_bounds(self) -> tuple[float, float]:
        """Interval on which the graph vanishes (degenerate for gamma_n)."""
        if self.kind == "general":
            return self.params.e1, self.params.e2
        if self.kind == "regularized":
            return 0.0, 0.0
        if self.kind == "one-phase":
            return -np.inf, 1.0
        return -1.0, 1.0

    @property
    def lipschitz(self) -> float:
        if self.kind == "general":
            return max(self.params.c1, self.params.c2)
        return 1.0

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.params is not None:
            d.update(e1=self.params.e1, e2=self.params.e2, c1=self.params.c1, c2=self.params.c2)
        if self.n is not None:
            d["n"] = self.n
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        kind = d.get("kind", "canonical")
        params = None
        if kind == "general":
            params = GraphParams(d["e1"], d["e2"], d["c1"], d["c2"])
        return cls(kind, params, d.get("n"))


CANONICAL = GraphSpec("canonical")
ONE_PHASE = GraphSpec("one-phase")
