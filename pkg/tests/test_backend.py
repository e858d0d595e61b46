import os
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_stefan import _backend, _pure
from nonlocal_stefan.grid import Grid
from nonlocal_stefan.kernel import build_kernel

core = pytest.importorskip("nonlocal_stefan._core")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.mark.parametrize("profile", ["tent", "poly-bump"])
def test_convolution_bit_identical_1d(rng, profile):
    k = build_kernel(profile, 0.7, Grid.line(-5, 5, 0.05))
    v = rng.normal(size=201)
    assert np.array_equal(core.convolve_1d(k.mass, k.half, v), _pure.convolve_1d(k.mass, k.half, v))


def test_convolution_bit_identical_2d(rng):
    k = build_kernel("poly-bump", 0.5, Grid.square(-2, 2, 0.1))
    v = rng.normal(size=(41, 41))
    assert np.array_equal(core.convolve_2d(k.mass, k.offsets, v),
                          _pure.convolve_2d(k.mass, k.offsets, v))


@pytest.mark.parametrize("forward", [True, False])
def test_sweep_bit_identical_1d(rng, forward):
    k = build_kernel("tent", 0.5, Grid.line(-4, 4, 0.05))
    f = np.where(np.abs(np.linspace(-4, 4, 161)) < 1.5, rng.uniform(-3, 3, 161), 0.0)
    wa, wb = np.zeros(161), np.zeros(161)
    for _ in range(25):
        ua = core.bop_sweep_1d(k.mass, k.half, f, wa, forward)
        ub = _pure.bop_sweep_1d(k.mass, k.half, f, wb, forward)
        assert ua == ub
        assert np.array_equal(wa, wb)


def test_sweep_bit_identical_2d(rng):
    k = build_kernel("tent", 0.3, Grid.square(-1.5, 1.5, 0.1))
    f = rng.uniform(-3, 3, size=(31, 31)) * (rng.random((31, 31)) < 0.3)
    wa, wb = np.zeros_like(f), np.zeros_like(f)
    for forward in (True, False, True):
        ua = core.bop_sweep_2d(k.mass, k.offsets, k.centre, f, wa, forward)
        ub = _pure.bop_sweep_2d(k.mass, k.offsets, k.centre, f, wb, forward)
        assert ua == ub and np.array_equal(wa, wb)


def test_default_backend_is_compiled():
    assert _backend.NAME == "compiled" and _backend.impl is core


def test_environment_forces_fallback():
    env = dict(os.environ, NONLOCAL_STEFAN_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import nonlocal_stefan as m; print(m.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "pure"
