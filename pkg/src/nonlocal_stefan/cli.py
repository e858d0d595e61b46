"""Command-line front end. One JSON scenario per invocation; artifacts are
written atomically into the output directory.

Exit status: 0 when every assertion of the subcommand passes, 1 when one
fails, 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics, diagnostics, phaseloss
from .evolution import EvolutionError, KernelSpec, SimConfig, SupportGuardError, integrate
from .graph import GraphError, GraphSpec
from .grid import Field, Grid, GridError, integral, l1_distance
from .kernel import KernelError


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- scenarios

def _grid(spec: dict) -> Grid:
    if "shape" in spec:
        return Grid.from_dict(spec)
    dim = int(spec.get("dim", 1))
    try:
        lower, upper, h = float(spec["lower"]), float(spec["upper"]), float(spec["h"])
    except KeyError as e:
        raise ConfigError(f"grid needs 'lower', 'upper' and 'h' (missing {e})") from None
    if upper <= lower:
        raise ConfigError("grid: upper must exceed lower")
    return Grid.line(lower, upper, h) if dim == 1 else Grid.square(lower, upper, h)


def _segment(grid: Grid, seg: dict, coords) -> np.ndarray:
    value = float(seg["value"])
    if "center" in seg:
        c = np.atleast_1d(np.asarray(seg["center"], dtype=float))
        r2 = sum((x - ci) ** 2 for x, ci in zip(coords, c))
        return np.where(r2 <= float(seg["radius"]) ** 2 * (1 + 1e-12), value, 0.0)
    lo = np.atleast_1d(np.asarray(seg["lower"], dtype=float))
    hi = np.atleast_1d(np.asarray(seg["upper"], dtype=float))
    if len(lo) == 1 and grid.dim == 2:
        lo, hi = np.repeat(lo, 2), np.repeat(hi, 2)
    tol = 1e-9 * grid.spacing
    inside = np.ones(grid.shape, dtype=bool)
    for x, a, b in zip(coords, lo, hi):
        inside &= (x >= a - tol) & (x <= b + tol)
    return np.where(inside, value, 0.0)


def _bump(bump: dict, coords) -> np.ndarray:
    c = np.atleast_1d(np.asarray(bump["center"], dtype=float))
    r2 = sum((x - ci) ** 2 for x, ci in zip(coords, c)) / float(bump["width"]) ** 2
    return float(bump["height"]) * np.maximum(1.0 - r2, 0.0) ** 2


def _random(grid: Grid, spec: dict, rng: np.random.Generator) -> np.ndarray:
    """Sum of random signed boxes inside [lower, upper]^N."""
    coords = grid.coordinates()
    lo, hi = float(spec["lower"]), float(spec["upper"])
    out = np.zeros(grid.shape)
    for _ in range(int(spec.get("count", 3))):
        a = rng.uniform(lo, hi, size=grid.dim)
        b = a + rng.uniform(0.1, 0.5, size=grid.dim) * (hi - lo)
        height = rng.uniform(-float(spec.get("max_height", 3.0)), float(spec.get("max_height", 3.0)))
        box = np.ones(grid.shape, dtype=bool)
        for x, p, q in zip(coords, a, np.minimum(b, hi)):
            box &= (x >= p) & (x <= q)
        out += np.where(box, height, 0.0)
    return out


def initial_field(grid: Grid, spec: dict, seed: int = 0, base: Path | None = None) -> Field:
    if "file" in spec:
        path = Path(spec["file"])
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ConfigError(f"initial data file not found: {path}")
        f = Field.from_json(path.read_text())
        if f.grid != grid:
            raise ConfigError("initial data file lives on a different grid")
        return f
    coords = grid.coordinates()
    vals = np.zeros(grid.shape)
    for seg in spec.get("segments", []):
        vals = vals + _segment(grid, seg, coords)
    for bump in spec.get("bumps", []):
        vals = vals + _bump(bump, coords)
    if "random" in spec:
        vals = vals + _random(grid, spec["random"], np.random.default_rng(seed))
    return Field(grid, vals)


@dataclass
class Scenario:
    name: str
    grid: Grid
    f: Field
    config: SimConfig
    raw: dict

    @property
    def kernel(self):
        return self.config.kernel.build(self.grid)

    def section(self, key: str) -> dict:
        return self.raw.get(key, {})


SOLVER_KEYS = ("dt", "t_end", "stride", "margin", "stop", "tol", "eps")


def load_scenario(raw: dict, base: Path | None = None) -> Scenario:
    try:
        grid = _grid(raw["grid"])
        ks = raw.get("kernel", {})
        kernel = KernelSpec(ks.get("profile", "tent"), float(ks.get("radius", 1.0)))
        kernel.build(grid)
        graph = GraphSpec.from_dict(raw.get("graph", {"kind": "canonical"}))
        solver = raw.get("solver", {})
        unknown = set(solver) - set(SOLVER_KEYS) - {"sweeps", "sweep_tol", "keep_snapshots", "rest_horizon"}
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        cfg = SimConfig(kernel, graph, **{k: solver[k] for k in SOLVER_KEYS if k in solver})
        if "keep_snapshots" in solver:
            cfg = cfg.replace(keep_snapshots=bool(solver["keep_snapshots"]))
        f = initial_field(grid, raw.get("initial", {}), int(raw.get("seed", 0)), base)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, GridError, KernelError, GraphError) as e:
        raise ConfigError(f"invalid scenario: {e}") from None
    return Scenario(raw.get("name", "scenario"), grid, f, cfg, raw)


# ---------------------------------------------------------------- output

class Writer:
    def __init__(self, out: Path):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        self.written = []

    def text(self, name: str, content: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(content)
        os.replace(tmp, self.out / name)
        self.written.append(name)

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")

    def series(self, name: str, times, values) -> None:
        lines = ["t,value"] + [f"{float(t)!r},{float(v)!r}" for t, v in zip(times, values)]
        self.text(name, "\n".join(lines) + "\n")

    def field(self, stem: str, f: Field) -> None:
        self.text(f"{stem}.csv", f.to_csv())
        self.text(f"{stem}.json", f.to_json() + "\n")


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


# ---------------------------------------------------------------- subcommands

def cmd_simulate(sc: Scenario, wr: Writer, args) -> list[str]:
    outs = sc.section("outputs")
    traj = integrate(sc.f, sc.config)
    wr.text("diagnostics.csv", traj.diagnostics_csv())
    d = traj.diagnostics
    for key in ("mass", "linf", "l1_gamma"):
        wr.series(f"{key}.csv", [x.t for x in d], [getattr(x, key) for x in d])
    wr.field("final", traj.final)
    if outs.get("snapshots"):
        for k in range(len(traj.u)):
            wr.text(f"snapshot_{traj.steps[k]:06d}.csv", traj.snapshot(k).to_csv())
    return []


def cmd_project(sc: Scenario, wr: Writer, args) -> list[str]:
    if np.any(sc.f.values < 0):
        raise ConfigError("project needs nonnegative initial data")
    pf = asymptotics.project_one_phase(sc.f, sc.config.replace(stop="gamma_l1"))
    wr.field("projection", pf)
    wr.json("project.json", {"mass_in": integral(sc.f), "mass_out": integral(pf),
                             "max": float(np.max(pf.values))})
    return []


def cmd_bop(sc: Scenario, wr: Writer, args) -> list[str]:
    solver = sc.section("solver")
    limits = {"gap": 1e-6, "complementarity": 1e-8, **sc.section("assert")}
    k = sc.kernel
    rt = asymptotics.solve_bop_time(sc.f, sc.config, k)
    rd = asymptotics.solve_bop_direct(sc.f, k, int(solver.get("sweeps", 200_000)),
                                      float(solver.get("sweep_tol", 1e-12)))
    failures = []
    for res, tag in ((rt, "time"), (rd, "direct")):
        wr.field(f"w_inf_{tag}", res.w_inf)
        wr.field(f"f_tilde_{tag}", res.f_tilde)
        wr.text(f"bop_{tag}.json", res.to_json(f"w_inf_{tag}.json", f"f_tilde_{tag}.json") + "\n")
        if res.complementarity > limits["complementarity"]:
            failures.append(f"complementarity ({tag}): {res.complementarity:.3e} > "
                            f"{limits['complementarity']:.1e}")
    gap = l1_distance(rt.w_inf, rd.w_inf)
    gap_f = l1_distance(rt.f_tilde, rd.f_tilde)
    if gap > limits["gap"]:
        failures.append(f"cross-method L1 gap of w_inf: {gap:.3e} > {limits['gap']:.1e}")
    wr.json("bop_report.json", {"gap_w_inf": gap, "gap_f_tilde": gap_f,
                                "time": rt.residuals, "direct": rd.residuals,
                                "sweeps": rd.iterations, "pass": not failures})
    return failures


def cmd_criterion(sc: Scenario, wr: Writer, args) -> list[str]:
    c = sc.section("criterion")
    rep = phaseloss.criterion(sc.f, sc.kernel, sc.config, R=c.get("R"),
                              verify=bool(c.get("verify", True)), horizon=c.get("horizon"),
                              margin=c.get("margin"))
    wr.text("criterion.json", rep.to_json() + "\n")
    if rep.bound_respected is False:
        return [f"phase-loss bound: measured loss time {rep.exact_loss_time} > "
                f"t1 + dt = {rep.t1 + sc.config.dt}"]
    return []


def _rest_config(sc: Scenario) -> SimConfig:
    """The scenario config with the horizon stretched for runs to rest."""
    horizon = sc.section("solver").get("rest_horizon", max(sc.config.t_end, 1e4))
    return sc.config.replace(stop="gamma_l1", t_end=float(horizon))


def _retention(sc: Scenario, traj) -> diagnostics.Report:
    """Retention is only claimed for one phase or for temperature-separated phases."""
    if np.any(sc.f.values > 0) and np.any(sc.f.values < 0):
        try:
            inter = asymptotics.check_noninteraction(sc.f, traj.kernel, _rest_config(sc))
        except asymptotics.ConvergenceError:
            return diagnostics.Report.skip("retention", "separation unknown: no rest state")
        if not inter.at_least("temperature"):
            return diagnostics.Report.skip(
                "retention", f"phases closer than R_J (temperature distance "
                             f"{inter.temperature_distance:.6g})")
    return diagnostics.check_retention(traj)


def cmd_decompose(sc: Scenario, wr: Writer, args) -> list[str]:
    limit = float(sc.section("assert").get("gap", 1e-10))
    k = sc.kernel
    inter = asymptotics.check_noninteraction(sc.f, k, _rest_config(sc))
    info = {"level": inter.level, "temperature_distance": inter.temperature_distance,
            "enthalpy_distance": inter.enthalpy_distance, "R_J": k.radius}
    if inter.level != "strong":
        wr.json("noninteraction.json", info)
        return [f"non-interaction: level {inter.level}, need strong "
                f"(enthalpy distance {inter.enthalpy_distance} <= 2 R_J)"]
    cfg = sc.config.replace(stop="horizon")
    pred = asymptotics.decompose_noninteracting(sc.f, cfg, k, inter)
    full = integrate(sc.f, cfg, k)
    gaps = [float(np.max(np.abs(a - b))) for a, b in zip(pred.u, full.u)]
    wr.series("decomposition_gap.csv", full.times, gaps)
    info["max_gap"] = max(gaps)
    wr.json("noninteraction.json", info)
    if info["max_gap"] > limit:
        return [f"decomposition gap {info['max_gap']:.3e} > {limit:.1e}"]
    return []


def cmd_checks(sc: Scenario, wr: Writer, args) -> list[str]:
    cfg = sc.config.replace(stride=1, keep_snapshots=True, stop="horizon")
    traj = integrate(sc.f, cfg)
    k = traj.kernel
    jobs = {
        "mass_conservation": lambda: diagnostics.check_mass(traj),
        "linf_bound": lambda: diagnostics.check_sup_bound(traj),
        "support_growth": lambda: diagnostics.check_support_growth(
            traj, diagnostics.support_bound(sc.f, k, traj.eps)),
        "retention": lambda: _retention(sc, traj),
        "subcaloric": lambda: diagnostics.check_subcaloric(traj),
    }
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
        futures = {name: ex.submit(fn) for name, fn in jobs.items()}
        reports = [futures[name].result() for name in jobs]
    wr.json("checks.json", [r.to_dict() for r in reports])
    return [f"{r.check}: {r.count} violation(s), first {r.violations[0]}"
            for r in reports if not r.passed]


COMMANDS = {"simulate": cmd_simulate, "project": cmd_project, "bop": cmd_bop,
            "criterion": cmd_criterion, "decompose": cmd_decompose, "checks": cmd_checks}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-stefan",
                                description="Simulate and verify the nonlocal two-phase Stefan problem.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", help="output directory (default $STEFAN_OUT_DIR or ./out)")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--tol", type=float)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dump-effective-config", action="store_true",
                   help="write effective_config.json with flags merged in")
    return p


def effective_config(raw: dict, args) -> dict:
    eff = copy.deepcopy(raw)
    solver = eff.setdefault("solver", {})
    for key in ("dt", "t_end", "tol"):
        val = getattr(args, key)
        if val is not None:
            solver[key] = val
    return eff


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out or os.environ.get("STEFAN_OUT_DIR") or "out")
    try:
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
        eff = effective_config(raw, args)
        sc = load_scenario(eff, path.parent)
        wr = Writer(out)
        if args.dump_effective_config:
            wr.json("effective_config.json", eff)
        failures = COMMANDS[args.command](sc, wr, args)
    except (ConfigError, SupportGuardError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (asymptotics.HypothesisError, asymptotics.ConvergenceError,
            phaseloss.NotApplicableError, EvolutionError) as e:
        print(f"failed: {e}", file=sys.stderr)
        return 1
    for msg in failures:
        print(f"FAIL {msg}", file=sys.stderr)
    print(f"{args.command}: {'FAIL' if failures else 'ok'} ({len(wr.written)} files in {out})")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
