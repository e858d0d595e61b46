import json
import math

import numpy as np
import pytest

from conftest import interval, loss_config, loss_scenario
from nonlocal_stefan.asymptotics import project_general, project_one_phase, run_to_rest
from nonlocal_stefan.evolution import KernelSpec, SimConfig
from nonlocal_stefan.graph import CANONICAL
from nonlocal_stefan.grid import Field, Grid, l1_distance, l1_norm
from nonlocal_stefan.kernel import build_kernel, convolve_array
from nonlocal_stefan.phaseloss import (CriterionError, NotApplicableError, alpha_of,
                                       asymptotic_after_loss, beta_of, criterion, estimate_R,
                                       kappa_of, phi)


def test_kappa_closed_forms():
    k = kappa_of(1.0, 1.0, 0.0)
    assert k.kappa == pytest.approx(1 / math.e, abs=1e-10)
    assert k.eta_star == pytest.approx(1 / math.e, abs=1e-10)
    k = kappa_of(math.e, 0.3, 0.0)
    assert k.kappa == pytest.approx(1.0, abs=1e-10)
    assert k.t1 == pytest.approx(1.0, abs=1e-10)
    assert k.eta_star * k.t1 == pytest.approx(k.kappa, abs=1e-15)


def test_kappa_matches_grid_scan():
    alpha, b = 1.0, 0.1
    k = kappa_of(alpha, 1.0, b)
    eta = np.linspace(0, alpha - b, 1_000_001)[1:-1]
    vals = phi(eta, alpha, b)
    assert abs(k.kappa - vals.max()) <= 1e-9
    assert abs(k.eta_star - eta[np.argmax(vals)]) <= 1e-5
    assert k.eta_bar == pytest.approx(0.9, abs=1e-15)


def test_kappa_hypothesis_fails():
    with pytest.raises(CriterionError, match="criterion hypothesis fails"):
        kappa_of(0.5, 1.0, 0.5)
    with pytest.raises(CriterionError):
        kappa_of(0.0, 1.0, 0.0)


def test_kappa_nonincreasing_in_negative_mass():
    ks = [kappa_of(0.9, 0.125, m).kappa for m in np.linspace(0, 7.0, 71)]
    assert all(b <= a for a, b in zip(ks, ks[1:]))


@pytest.mark.parametrize("alpha,b", [(0.3, 0.01), (1.0, 0.5), (5.0, 4.9), (2.0, 1e-9)])
def test_kappa_identity(alpha, b):
    k = kappa_of(alpha, 1.0, b)
    assert abs(k.kappa - k.eta_star * k.t1) <= 1e-10
    assert 0 < k.eta_star < alpha - b


def test_beta_of_tent():
    g = Grid.line(-3, 3, 0.05)
    k = build_kernel("tent", 1.0, g)
    for R in (1e-6, 0.1, 0.3, 2.0):
        assert beta_of(k, R) == k.weight(0)
    offs = k.offsets[:, 0]
    assert beta_of(k, 0.2) == max(w for o, w in zip(offs, k.weights) if abs(o) * 0.05 <= 0.4)


def test_alpha_of():
    g = Grid.line(-10, 10, 0.05)
    k = build_kernel("tent", 1.0, g)
    assert alpha_of(Field.zeros(g), k, 2.0) == 0.0
    ones = Field(g, interval(g, -4, 4, 1.0))
    assert alpha_of(ones, k, 2.0) == pytest.approx(1.0, abs=1e-14)
    rng = np.random.default_rng(6)
    v = Field(g, interval(g, -2, 1, 1.0) * rng.random(g.shape))
    conv = convolve_array(k, v.values)
    x = g.axis(0)
    brute = min(conv[i] for i in range(len(x)) if abs(x[i]) <= 1.5)
    assert alpha_of(v, k, 1.5) == brute
    bigger = Field(g, v.values + interval(g, -1, 0, 0.5))
    assert alpha_of(bigger, k, 1.5) >= alpha_of(v, k, 1.5)
    with pytest.raises(CriterionError):
        alpha_of(v, k, 0.0)


def test_estimate_R_simple(plateau, tent_cfg):
    mushy = Field(plateau.grid, interval(plateau.grid, -1, 1, 0.5))
    assert estimate_R(mushy, tent_cfg) == 1.0
    assert estimate_R(plateau, tent_cfg) >= 1.0 + 1.0
    assert estimate_R(plateau, tent_cfg, margin=0.0, horizon=0.0) == pytest.approx(1.0)


def test_criterion_nonnegative_data(plateau, tent_cfg):
    rep = criterion(plateau, tent_cfg.kernel.build(plateau.grid), tent_cfg, verify=True)
    assert rep.criterion_holds and rep.f_minus_sup == 0.0
    assert rep.measured_loss_time == 0.0 and rep.bound_respected


def test_criterion_loss_scenario():
    f = loss_scenario()
    cfg = loss_config()
    k = cfg.kernel.build(f.grid)
    rep = criterion(f, k, cfg, verify=True, horizon=1.0, margin=0.0)
    assert rep.R == pytest.approx(6.5) and rep.R_source == "estimated"
    assert rep.t1 <= 1.0  # the measuring horizon covered [0, t1]
    assert rep.criterion_holds and rep.failure is None
    assert rep.beta == k.weight(0)
    assert rep.eta_bar == pytest.approx(rep.alpha - rep.beta * rep.v_minus_l1, abs=1e-15)
    assert abs(rep.kappa - rep.eta_star * rep.t1) <= 1e-10
    assert rep.exact_loss_time is not None and rep.exact_loss_time <= rep.t1 + cfg.dt
    assert rep.bound_respected
    d = json.loads(rep.to_json())
    assert len(d["config_hash"]) == 64 and d["criterion_holds"] is True


def test_criterion_default_margin_loses_alpha():
    f = loss_scenario()
    cfg = loss_config()
    rep = criterion(f, cfg.kernel.build(f.grid), cfg)
    assert rep.R == pytest.approx(6.5 + 8.0)
    assert not rep.criterion_holds and rep.failure == "alpha_zero"


def test_criterion_deep_dip():
    cfg = loss_config()
    k = cfg.kernel.build(loss_scenario().grid)
    depth = 2.0
    for _ in range(60):  # depth = 1 + kappa(depth) + 1
        rep = criterion(loss_scenario(depth), k, cfg, R=6.5)
        depth = 2.0 + rep.kappa
    rep = criterion(loss_scenario(depth), k, cfg, R=6.5)
    assert rep.f_minus_sup == pytest.approx(1 + rep.kappa + 1, abs=1e-9)
    assert not rep.criterion_holds and rep.failure == "dip_too_deep"
    assert rep.margin == pytest.approx(-1.0, abs=1e-9)
    assert rep.R_source == "user"


def test_asymptotic_after_loss_trivial(line):
    f = Field(line, interval(line, -2, 2, 0.8) - interval(line, 3, 4, 1.0))
    cfg = SimConfig(KernelSpec("tent", 1.0), dt=0.5, t_end=100.0)
    assert asymptotic_after_loss(f, cfg) is f


def test_asymptotic_after_loss_nonnegative(plateau):
    cfg = SimConfig(KernelSpec("tent", 1.0), dt=0.5, t_end=3000.0, tol=1e-11 * 7.15)
    assert l1_distance(asymptotic_after_loss(plateau, cfg), project_one_phase(plateau, cfg)) == 0.0


def test_asymptotic_after_loss_not_applicable():
    g = Grid.line(-16, 16, 0.05)
    f = Field(g, interval(g, -7, -5, 3.0) - interval(g, 5, 7, 3.0))
    with pytest.raises(NotApplicableError, match="not applicable"):
        asymptotic_after_loss(f, SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=5.0))


def test_asymptotic_after_loss_scenario():
    f = loss_scenario()
    cfg = loss_config(dt=0.5, t_end=5000.0, tol=1e-11 * (1 + l1_norm(f)))
    k = cfg.kernel.build(f.grid)
    lim = asymptotic_after_loss(f, cfg, k)
    direct = run_to_rest(f, cfg, CANONICAL, k).final
    assert l1_distance(lim, direct) <= 1e-8
    pg = project_general(f, cfg, k)
    assert pg.route == "phase-loss" and pg.resolved
    assert l1_distance(lim, pg.field) <= 1e-8
    assert np.min(lim.values) >= -1.0 and np.max(lim.values) <= 1 + 1e-8
