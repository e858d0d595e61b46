"""Uniform 1D/2D lattices, fields sampled on them, and the discrete
integral/norm primitives shared by the rest of the package."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.ndimage import distance_transform_edt


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform lattice with the same spacing ``h`` on every axis.

    Node ``i`` along an axis sits at ``origin + i*h``; coordinates are always
    recomputed from the index, never accumulated.
    """

    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        origin = tuple(float(o) for o in self.origin)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(shape) not in (1, 2):
            raise GridError(f"only 1D and 2D grids are supported, got dim={len(shape)}")
        if len(origin) != len(shape):
            raise GridError("origin must have one coordinate per axis")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise GridError(f"spacing must be positive, got {self.spacing}")
        if min(shape) < 3:
            raise GridError(f"every axis needs at least 3 nodes, got {shape}")

    @classmethod
    def line(cls, lower: float, upper: float, spacing: float) -> "Grid":
        """1D grid from ``lower`` with nodes up to (and including) ``upper``."""
        n = int(round((upper - lower) / spacing)) + 1
        return cls((n,), spacing, (lower,))

    @classmethod
    def square(cls, lower: float, upper: float, spacing: float) -> "Grid":
        n = int(round((upper - lower) / spacing)) + 1
        return cls((n, n), spacing, (lower, lower))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis(self, k: int = 0) -> np.ndarray:
        return self.origin[k] + np.arange(self.shape[k]) * self.spacing

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays with the grid's shape, one per axis."""
        return list(np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean distance of each node from the origin of R^N."""
        return np.sqrt(sum(c * c for c in self.coordinates()))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "shape": list(self.shape), "spacing": self.spacing,
                "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        g = cls(tuple(d["shape"]), d["spacing"], tuple(d["origin"]))
        if "dim" in d and d["dim"] != g.dim:
            raise GridError("dim does not match shape")
        return g


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar values on every node of a grid. The array is read-only."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise GridError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(*grid.coordinates()))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def map(self, fn) -> "Field":
        return Field(self.grid, fn(self.values))

    def positive_part(self) -> "Field":
        return Field(self.grid, np.maximum(self.values, 0.0))

    def negative_part(self) -> "Field":
        return Field(self.grid, np.maximum(-self.values, 0.0))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps({"grid": self.grid.to_dict(),
                           "values": [float(x) for x in self.values.ravel()]})

    @classmethod
    def from_json(cls, text: str) -> "Field":
        d = json.loads(text)
        return cls(Grid.from_dict(d["grid"]), np.asarray(d["values"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.grid.dim == 1:
            w.writerow(["index", "coord", "value"])
            for i, (x, v) in enumerate(zip(self.grid.axis(0), self.values)):
                w.writerow([i, repr(float(x)), repr(float(v))])
        else:
            w.writerow(["index", "coord", "coord2", "value"])
            xs, ys = self.grid.axis(0), self.grid.axis(1)
            ny = self.grid.shape[1]
            for flat, v in enumerate(self.values.ravel()):
                i, j = divmod(flat, ny)
                w.writerow([flat, repr(float(xs[i])), repr(float(ys[j])), repr(float(v))])
        return buf.getvalue()


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise GridError("fields live on different grids")


def integral(f: Field) -> float:
    """h^N times the sum of the node values.

    The sum is correctly rounded (``math.fsum``), hence independent of
    summation order and bit-reproducible.
    """
    return f.grid.cell_volume * math.fsum(f.values.ravel().tolist())


def l1_norm(f: Field) -> float:
    return f.grid.cell_volume * math.fsum(np.abs(f.values).ravel().tolist())


def l1_distance(a: Field, b: Field) -> float:
    _same_grid(a, b)
    return a.grid.cell_volume * math.fsum(np.abs(a.values - b.values).ravel().tolist())


def positive_l1(a: Field, b: Field) -> float:
    """Discrete integral of (a - b)_+."""
    _same_grid(a, b)
    return a.grid.cell_volume * math.fsum(np.maximum(a.values - b.values, 0.0).ravel().tolist())


def default_eps(f: Field) -> float:
    return 1e-10 * max(1.0, f.sup_norm())


def support_mask(f: Field, eps: float) -> np.ndarray:
    """Boolean mask of the nodes where |value| > eps."""
    if not eps > 0:
        raise GridError("eps must be positive")
    return np.abs(f.values) > eps


def set_distance(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """Smallest Euclidean distance between a node of ``a`` and a node of ``b``.

    Returns +inf when either mask is empty.
    """
    ia = np.argwhere(a)
    ib = np.argwhere(b)
    if len(ia) == 0 or len(ib) == 0:
        return math.inf
    if np.any(a & b):
        return 0.0
    if grid.dim == 1:
        xa = np.sort(ia[:, 0])
        xb = ib[:, 0]
        pos = np.searchsorted(xa, xb)
        best = np.inf
        for side in (pos - 1, pos):
            ok = (side >= 0) & (side < len(xa))
            if np.any(ok):
                best = min(best, np.min(np.abs(xa[side[ok]] - xb[ok])))
        return float(best) * grid.spacing
    # 2D: compare only boundary-ish candidates in chunks to keep memory bounded
    best = np.inf
    for start in range(0, len(ia), 2048):
        chunk = ia[start:start + 2048].astype(float)
        d2 = ((chunk[:, None, :] - ib[None, :, :].astype(float)) ** 2).sum(axis=2)
        best = min(best, float(d2.min()))
    return math.sqrt(best) * grid.spacing


def ball_offsets(radius: float, grid: Grid) -> np.ndarray:
    """Integer offsets k with |k|*h <= radius (rows, ascending lexicographic)."""
    r = int(math.floor(radius / grid.spacing + 1e-9))
    if grid.dim == 1:
        return np.arange(-r, r + 1).reshape(-1, 1)
    ks = np.arange(-r, r + 1)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    inside = (kx * kx + ky * ky) * grid.spacing ** 2 <= radius * radius * (1 + 1e-12)
    return np.stack([kx[inside], ky[inside]], axis=1)


def dilate(mask: np.ndarray, radius: float, grid: Grid) -> np.ndarray:
    """Mask dilation by the closed ball of the given radius.

    1D: by ceil(radius/h) nodes; 2D: Euclidean ball of nodes.
    """
    if radius <= 0 or not mask.any():
        return mask.copy()
    if grid.dim == 1:
        r = int(math.ceil(radius / grid.spacing - 1e-9))
        n = mask.shape[0]
        idx = np.flatnonzero(mask)
        # difference array: mark [i-r, i+r] for every set node
        marks = np.zeros(n + 1, dtype=np.int64)
        np.add.at(marks, np.clip(idx - r, 0, n), 1)
        np.add.at(marks, np.clip(idx + r + 1, 0, n), -1)
        return np.cumsum(marks)[:n] > 0
    # exact Euclidean distance (in nodes) to the nearest set node
    dist = distance_transform_edt(~mask)
    return dist * grid.spacing <= radius * (1 + 1e-12)
