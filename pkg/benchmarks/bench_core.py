"""Compiled core vs pure fallback: kernel timings and an end-to-end run.

    python3 benchmarks/bench_core.py [--repeat 5] [--json results.json]

Every timed pair is also checked for bit-identical output.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from nonlocal_stefan import _backend
from nonlocal_stefan.kernel import build_kernel
from nonlocal_stefan.grid import Grid

END_TO_END = """
import hashlib, time
import numpy as np
from nonlocal_stefan import BACKEND
from nonlocal_stefan.evolution import KernelSpec, SimConfig, integrate
from nonlocal_stefan.grid import Field, Grid
g = Grid.line(-16, 16, 0.05)
x = g.axis(0)
f = Field(g, np.where(np.abs(x + 3) <= 1, 3.0, 0.0) - np.where(np.abs(x - 3) <= 1, 2.5, 0.0))
t = time.perf_counter()
tr = integrate(f, SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=20.0, keep_snapshots=False))
print(BACKEND, time.perf_counter() - t, hashlib.sha256(tr.final.values.tobytes()).hexdigest())
"""


def cases():
    rng = np.random.default_rng(0)
    line = Grid.line(-20, 20, 0.05)
    k1 = build_kernel("tent", 1.0, line)
    v1 = rng.standard_normal(line.shape)
    square = Grid.square(-4, 4, 0.125)
    k2 = build_kernel("poly-bump", 0.5, square)
    v2 = rng.standard_normal(square.shape)
    f1 = 3 * np.abs(v1)
    f2 = 3 * np.abs(v2)
    yield "convolve_1d (801 nodes, 41 taps)", "convolve_1d", (k1.mass, k1.half, v1), False
    yield "convolve_2d (65^2 nodes, 49 taps)", "convolve_2d", (k2.mass, k2.offsets, v2), False
    yield "bop_sweep_1d (one sweep)", "bop_sweep_1d", (k1.mass, k1.half, f1), True
    yield "bop_sweep_2d (one sweep)", "bop_sweep_2d", (k2.mass, k2.offsets, k2.centre, f2), True


def time_call(fn, args, sweep, repeat):
    def call():
        if sweep:
            w = np.zeros_like(args[-1])
            fn(*args, w)
            return w
        return fn(*args)
    number = max(1, int(0.2 / max(min(timeit.repeat(call, number=1, repeat=2)), 1e-7)))
    best = min(timeit.repeat(call, number=number, repeat=repeat)) / number
    return best, call()


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write results to this file")
    args = p.parse_args(argv)
    if _backend.NAME != "compiled":
        sys.exit("compiled core not built; run `pip install -e . --no-build-isolation` first")
    rows = []
    print(f"{'kernel':38s} {'compiled':>12s} {'pure':>12s} {'speedup':>9s}  identical")
    for label, name, fargs, sweep in cases():
        tc, oc = time_call(getattr(_backend.impl, name), fargs, sweep, args.repeat)
        tp, op = time_call(getattr(_backend._pure, name), fargs, sweep, args.repeat)
        same = bool(np.array_equal(oc, op))
        rows.append({"case": label, "compiled_s": tc, "pure_s": tp, "identical": same})
        print(f"{label:38s} {tc:12.3e} {tp:12.3e} {tp / tc:8.1f}x  {same}")
    runs = {}
    for pure in (False, True):
        env = dict(os.environ, NONLOCAL_STEFAN_PURE="1" if pure else "0")
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        runs[out[0]] = (float(out[1]), out[2])
    (tc, hc), (tp, hp) = runs["compiled"], runs["pure"]
    rows.append({"case": "integrate 1D, 200 steps", "compiled_s": tc, "pure_s": tp,
                 "identical": hc == hp})
    print(f"{'integrate 1D, 200 steps':38s} {tc:12.3e} {tp:12.3e} {tp / tc:8.1f}x  {hc == hp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
