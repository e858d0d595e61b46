import numpy as np
import pytest

from conftest import interval, random_field
from nonlocal_stefan.evolution import (DT_MAX, KernelSpec, PicardError, SimConfig,
                                       SupportGuardError, boundary_band, integrate,
                                       integrate_one_phase, integrate_regularized, picard_solve,
                                       step_explicit, support_radius_bound)
from nonlocal_stefan.graph import GraphParams, GraphSpec, gamma
from nonlocal_stefan.grid import Field, Grid, integral, l1_distance, l1_norm
from nonlocal_stefan.kernel import convolve_array


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(dt=DT_MAX + 1e-9)
    with pytest.raises(ValueError):
        SimConfig(dt=0.5, graph=GraphSpec("general", GraphParams(-1, 1, 1, 3)))
    with pytest.raises(ValueError):
        SimConfig(stop="forever")
    k = KernelSpec("tent", 1.0).build(Grid.line(-5, 5, 0.1))
    with pytest.raises(ValueError):
        SimConfig(margin=3).guard_margin(k)
    assert SimConfig().guard_margin(k) == 10


def test_step_mushy_and_zero(line, tent_cfg):
    k = tent_cfg.kernel.build(line)
    f = Field(line, np.sin(line.axis(0)) * np.where(np.abs(line.axis(0)) < 5, 1.0, 0.0))
    assert np.array_equal(step_explicit(f, k).values, f.values)
    assert np.array_equal(step_explicit(Field.zeros(line), k).values, np.zeros(line.shape))


def test_step_spike_by_hand(line, tent_cfg):
    k = tent_cfg.kernel.build(line)
    u = np.zeros(line.shape)
    u[200] = 3.0
    out = step_explicit(Field(line, u), k, dt=0.1).values
    expected = u.copy()
    for off, m in zip(k.offsets[:, 0], k.mass):
        expected[200 + off] += 0.1 * (m * 2.0)
    expected[200] -= 0.1 * 2.0
    assert np.max(np.abs(out - expected)) <= 1e-14


def test_guard_trips():
    g = Grid.line(-2, 2, 0.05)
    f = Field(g, interval(g, -0.8, 0.8, 3.0))
    cfg = SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=5.0)
    with pytest.raises(SupportGuardError, match="domain too small"):
        integrate(f, cfg)
    with pytest.raises(SupportGuardError, match="domain too small"):
        integrate(Field(g, interval(g, -2, -1.5, 3.0)), cfg)


def test_boundary_band():
    band = boundary_band((6, 7), 2)
    assert band[0, 3] and band[5, 3] and band[3, 0] and band[3, 6]
    assert not band[2:4, 2:5].any()


def test_mushy_data_is_stationary(line):
    f = Field(line, interval(line, -3, 3, -0.7) + interval(line, 1, 2, 1.7))
    tr = integrate(f, SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=2.0))
    for u, w in zip(tr.u, tr.w):
        assert np.array_equal(u, f.values)
        assert not w.any()


def test_reference_regression(plateau):
    cfg = SimConfig(KernelSpec("tent", 1.0), dt=0.1, t_end=5.0, stride=10)
    tr = integrate(plateau, cfg)
    d = tr.diagnostics[-1]
    assert tr.times == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    assert d.mass == pytest.approx(6.15, rel=1e-13)
    assert d.linf == pytest.approx(2.3707300734032715, rel=1e-12)
    assert d.l1_gamma == pytest.approx(2.6892453933994016, rel=1e-12)
    assert (d.supp_plus_count, d.supp_minus_count) == (61, 0)
    series = [x.l1_gamma for x in tr.diagnostics]
    assert all(b < a for a, b in zip(series, series[1:]))


def test_baiocchi_identity_is_exact(plateau, tent_cfg):
    tr = integrate(plateau, tent_cfg.replace(stride=5))
    k = tr.kernel
    assert not tr.w[0].any()
    for u, w in zip(tr.u, tr.w):
        rebuilt = plateau.values + convolve_array(k, w) - w
        assert np.max(np.abs(rebuilt - u)) <= 1e-13


def test_mass_conservation_steps(plateau, tent_cfg):
    tr = integrate(plateau, tent_cfg)
    for d in tr.diagnostics:
        assert abs(d.mass - 6.15) <= 1e-12 * 6.15


def test_stop_on_gamma_norm(plateau):
    cfg = SimConfig(KernelSpec("tent", 1.0), dt=0.5, t_end=5000.0, stop="gamma_l1",
                    keep_snapshots=False, stride=1000)
    tr = integrate(plateau, cfg)
    assert tr.stopped_by == "tol"
    assert tr.diagnostics[-1].l1_gamma < cfg.stop_tol(plateau)
    assert len(tr.u) == 1


def test_one_phase_variant(plateau, tent_cfg):
    a = integrate(plateau, tent_cfg)
    b = integrate_one_phase(plateau, tent_cfg)
    for ua, ub in zip(a.u, b.u):
        assert np.max(np.abs(ua - ub)) <= 1e-14
        assert np.all(ub >= 0)
    with pytest.raises(ValueError):
        integrate_one_phase(-plateau, tent_cfg)


def test_regularized_mass_and_start():
    g = Grid.line(-25, 25, 0.05)
    f = Field(g, interval(g, -1, 1, 3.0) - interval(g, 2, 3, 2.5))
    tr = integrate_regularized(f, SimConfig(KernelSpec("tent", 1.0), dt=0.05, t_end=1.0), 5)
    assert np.array_equal(tr.u[0], f.values)
    m = integral(f)
    assert all(abs(d.mass - m) <= 1e-11 * max(1, abs(m)) for d in tr.diagnostics)


def test_general_graph_conserves_mass(line):
    f = Field(line, interval(line, -1, 1, 4.0) - interval(line, 2, 3, 3.0))
    cfg = SimConfig(KernelSpec("poly-bump", 1.0), GraphSpec("general", GraphParams(-2, 1.5, 1, 2)),
                    dt=0.25, t_end=3.0)
    tr = integrate(f, cfg)
    m = integral(f)
    assert all(abs(d.mass - m) <= 1e-11 * abs(m) for d in tr.diagnostics)
    assert max(d.linf for d in tr.diagnostics) <= f.sup_norm() + 1e-12


def test_at_lookup(plateau, tent_cfg):
    tr = integrate(plateau, tent_cfg.replace(stride=10))
    assert np.array_equal(tr.at(2.0).values, tr.u[2])
    with pytest.raises(KeyError):
        tr.at(2.5)
    assert tr.diagnostics_csv().splitlines()[0] == "t,mass,linf,l1_gamma,supp_plus_count,supp_minus_count"


def test_picard_mushy_one_iteration(line, tent_cfg):
    f = Field(line, interval(line, -1, 1, 0.9))
    res = picard_solve(f, tent_cfg.kernel.build(line))
    assert res.iterations == 1
    assert np.array_equal(res.u.values, f.values)


def test_picard_matches_euler(plateau, tent_cfg):
    k = tent_cfg.kernel.build(plateau.grid)
    res = picard_solve(plateau, k, t0=0.4)
    ref = integrate(plateau, SimConfig(KernelSpec("tent", 1.0), dt=1e-3, t_end=0.4, stride=400))
    assert l1_distance(res.u, ref.at(0.4)) <= 5e-3
    assert max(res.contraction_ratios[:-1]) <= 2 * 0.4 + 0.05


def test_picard_rejects_long_window(plateau, tent_cfg):
    with pytest.raises(ValueError):
        picard_solve(plateau, tent_cfg.kernel.build(plateau.grid), t0=0.5)
    with pytest.raises(PicardError):
        picard_solve(plateau, tent_cfg.kernel.build(plateau.grid), max_iter=2)


def test_support_radius_bound(plateau, tent_cfg):
    k = tent_cfg.kernel.build(plateau.grid)
    tr = integrate(plateau, tent_cfg)
    radius = plateau.grid.radius()
    for t, u in zip(tr.times, tr.u):
        r = support_radius_bound(plateau, k, t)
        assert np.all(radius[np.abs(u) > tr.eps] <= r + 1e-12)


def test_thread_independent_results(line, tent_cfg):
    from concurrent.futures import ThreadPoolExecutor

    rng = np.random.default_rng(2)
    fields = [random_field(rng, line) for _ in range(4)]
    serial = [integrate(f, tent_cfg).final.values for f in fields]
    with ThreadPoolExecutor(4) as ex:
        parallel = list(ex.map(lambda f: integrate(f, tent_cfg).final.values, fields))
    for a, b in zip(serial, parallel):
        assert np.array_equal(a, b)


def test_l1_of_gamma_decreases_for_one_phase(plateau, tent_cfg):
    tr = integrate_one_phase(plateau, tent_cfg)
    norms = [l1_norm(Field(plateau.grid, gamma(u))) for u in tr.u]
    assert all(b <= a + 1e-14 for a, b in zip(norms, norms[1:]))
