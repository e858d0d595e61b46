"""Pure numpy/Python versions of the compiled kernels in ``_core``.

The convolutions accumulate offsets in ascending order, one shifted slice
at a time, so each output node sees exactly the same sequence of additions
as the compiled loop and the two backends agree bit for bit.
"""
import numpy as np


def convolve_1d(mass, half, v):
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    out = np.zeros(n)
    for k, m in enumerate(mass):
        off = k - half
        # out[i] += m * v[i - off] for 0 <= i - off < n
        lo, hi = max(0, off), min(n, n + off)
        if lo < hi:
            out[lo:hi] += m * v[lo - off:hi - off]
    return out


def convolve_2d(mass, offsets, v):
    v = np.asarray(v, dtype=np.float64)
    nx, ny = v.shape
    out = np.zeros((nx, ny))
    for m, (ox, oy) in zip(mass, offsets):
        ax, bx = max(0, ox), min(nx, nx + ox)
        ay, by = max(0, oy), min(ny, ny + oy)
        if ax < bx and ay < by:
            out[ax:bx, ay:by] += m * v[ax - ox:bx - ox, ay - oy:by - oy]
    return out


def _relax(g, denom):
    if g > 1.0:
        return (g - 1.0) / denom
    if g < -1.0:
        return (g + 1.0) / denom
    return 0.0


def bop_sweep_1d(mass, half, f, w, forward=True):
    n = w.shape[0]
    mass = [float(m) for m in mass]
    denom = 1.0 - mass[half]
    others = [(k - half, m) for k, m in enumerate(mass) if k != half]
    order = range(n) if forward else range(n - 1, -1, -1)
    biggest = 0.0
    for i in order:
        rest = 0.0
        for off, m in others:
            j = i - off
            if 0 <= j < n:
                rest = rest + m * w[j]
        new = _relax(f[i] + rest, denom)
        biggest = max(biggest, abs(new - w[i]))
        w[i] = new
    return biggest


def bop_sweep_2d(mass, offsets, centre, f, w, forward=True):
    nx, ny = w.shape
    mass = [float(m) for m in mass]
    denom = 1.0 - mass[centre]
    others = [(int(o[0]), int(o[1]), m)
              for k, (o, m) in enumerate(zip(offsets, mass)) if k != centre]
    flat = range(nx * ny) if forward else range(nx * ny - 1, -1, -1)
    biggest = 0.0
    for step in flat:
        i, j = divmod(step, ny)
        rest = 0.0
        for ox, oy, m in others:
            a, b = i - ox, j - oy
            if 0 <= a < nx and 0 <= b < ny:
                rest = rest + m * w[a, b]
        new = _relax(f[i, j] + rest, denom)
        biggest = max(biggest, abs(new - w[i, j]))
        w[i, j] = new
    return biggest
