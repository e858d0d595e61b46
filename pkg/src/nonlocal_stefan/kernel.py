"""Discrete convolution kernels (radial, compactly supported, unit mass) and
the zero-extended convolution J*v."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from ._backend import impl
from .grid import Field, Grid

PROFILES = ("tent", "poly-bump")


class KernelError(ValueError):
    pass


def profile_value(profile: str, r, radius: float):
    """Unnormalized radial profile at distance ``r``."""
    s = np.asarray(r, dtype=float) / radius
    if profile == "tent":
        return np.maximum(1.0 - s, 0.0)
    if profile == "poly-bump":
        return np.maximum(1.0 - s * s, 0.0) ** 2
    raise KernelError(f"unknown kernel profile {profile!r}; choose from {PROFILES}")


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Sampled kernel on a lattice of spacing ``spacing``.

    ``weights`` are density values (the sampled J rescaled so that
    h^N * sum(weights) == 1); ``mass`` holds h^N * weights and is what the
    convolution actually multiplies by. ``offsets`` are integer lattice
    offsets in ascending lexicographic order.
    """

    profile: str
    radius: float
    spacing: float
    dim: int
    offsets: np.ndarray = dc_field(repr=False)
    weights: np.ndarray = dc_field(repr=False)
    mass: np.ndarray = dc_field(repr=False)

    @property
    def half(self) -> int:
        """Largest |offset| along an axis, in nodes."""
        return int(np.max(np.abs(self.offsets)))

    @property
    def centre(self) -> int:
        return int(np.flatnonzero(np.all(self.offsets == 0, axis=1))[0])

    def weight(self, *k: int) -> float:
        hit = np.all(self.offsets == np.array(k), axis=1)
        return float(self.weights[hit][0]) if hit.any() else 0.0

    def to_json(self) -> str:
        d = {"profile": self.profile, "R_J": self.radius, "h": self.spacing,
             "dim": self.dim, "weights": [float(w) for w in self.weights]}
        if self.dim == 2:
            d["offsets"] = self.offsets.tolist()
        return json.dumps(d)


def build_kernel(profile: str, radius: float, grid: Grid) -> DiscreteKernel:
    return _build(profile, float(radius), grid.spacing, grid.dim)


@lru_cache(maxsize=64)
def _build(profile: str, radius: float, h: float, dim: int) -> DiscreteKernel:
    if radius < 2 * h * (1 - 1e-12):
        raise KernelError(f"kernel under-resolved: R_J={radius} < 2h={2 * h}")
    if profile not in PROFILES:
        raise KernelError(f"unknown kernel profile {profile!r}; choose from {PROFILES}")
    r = int(math.ceil(radius / h))
    ks = np.arange(-r, r + 1)
    if dim == 1:
        offsets = ks.reshape(-1, 1)
        dist = np.abs(ks) * h
    else:
        kx, ky = np.meshgrid(ks, ks, indexing="ij")
        offsets = np.stack([kx.ravel(), ky.ravel()], axis=1)
        dist = np.sqrt((kx * kx + ky * ky).ravel().astype(float)) * h
    raw = profile_value(profile, dist, radius)
    keep = raw > 0
    offsets = np.ascontiguousarray(offsets[keep], dtype=np.intp)
    raw = raw[keep]
    mass = raw / math.fsum(raw.tolist())
    weights = mass / h ** dim
    for a in (offsets, weights, mass):
        a.setflags(write=False)
    return DiscreteKernel(profile, radius, h, dim, offsets, weights, mass)


def _check(kernel: DiscreteKernel, grid: Grid) -> None:
    if not math.isclose(kernel.spacing, grid.spacing, rel_tol=1e-12) or kernel.dim != grid.dim:
        raise KernelError("kernel spacing/dimension does not match the field grid")


def convolve_array(kernel: DiscreteKernel, v: np.ndarray, backend=None) -> np.ndarray:
    """Raw-array convolution, zero extension outside the box."""
    be = backend or impl
    v = np.ascontiguousarray(v, dtype=np.float64)
    if kernel.dim == 1:
        return be.convolve_1d(kernel.mass, kernel.half, v)
    return be.convolve_2d(kernel.mass, kernel.offsets, v)


def convolve(kernel: DiscreteKernel, v: Field, method: str = "direct") -> Field:
    """(J*v)_i = sum_k h^N J_k v_{i-k} with v = 0 outside the grid.

    ``method="fft"`` uses a spectral product instead; it matches the direct
    sum to roundoff but not bit for bit, so it is off by default.
    """
    _check(kernel, v.grid)
    if method == "direct":
        return Field(v.grid, convolve_array(kernel, v.values))
    if method == "fft":
        return Field(v.grid, _convolve_fft(kernel, v.values))
    raise KernelError(f"unknown convolution method {method!r}")


def _convolve_fft(kernel: DiscreteKernel, v: np.ndarray) -> np.ndarray:
    from scipy.signal import fftconvolve

    p = kernel.half
    stencil = np.zeros((2 * p + 1,) * kernel.dim)
    idx = tuple((kernel.offsets + p).T)
    stencil[idx] = kernel.mass
    return fftconvolve(v, stencil, mode="same")


def kernel_sup(kernel: DiscreteKernel) -> float:
    """Largest sampled density value over the whole support."""
    return float(np.max(kernel.weights))


def kernel_sup_ball(kernel: DiscreteKernel, radius: float) -> float:
    """Largest sampled density value over offsets with |offset|*h <= radius."""
    if radius < 0:
        raise KernelError("radius must be nonnegative")
    dist = np.sqrt((kernel.offsets.astype(float) ** 2).sum(axis=1)) * kernel.spacing
    inside = dist <= radius * (1 + 1e-12)
    return float(np.max(kernel.weights[inside]))


__all__ = ["DiscreteKernel", "KernelError", "PROFILES", "build_kernel", "convolve",
           "convolve_array", "kernel_sup", "kernel_sup_ball", "profile_value"]
