import math

import numpy as np
import pytest

from spinwire.dynamics import Channel, decompose, evolve_mixed, evolve_pure, initial_state
from spinwire.entanglement import concurrence_general, reduce_to_pair, singlet_fraction
from spinwire.hamiltonian import ChainConfig, build_total
from spinwire.protocol import (
    TimeGrid,
    TransferEngine,
    check_grid,
    first_peak_index,
    parallel_map,
    quadratic_vertex,
    run_transfer,
    spin_wave_velocity,
    sweep_d,
    sweep_delta,
    sweep_phi_fixed_jtilde,
    sweep_thermal,
)

SHORT = TimeGrid(12.0, 0.02)


def brute_pair(cfg, channel, t):
    """Full-register reference for (0', end)."""
    psi = initial_state(cfg, channel)
    spec = decompose(build_total(cfg).h_total)
    st = evolve_pure(psi, spec, t) if channel.kind == "ground" else evolve_mixed(psi, spec, t)
    return reduce_to_pair(st, 0, cfg.n_total - 1)


def test_time_grid():
    g = TimeGrid(1.0, 0.1)
    t = g.times()
    assert len(t) == 11 and t[-1] == pytest.approx(1.0)
    d = TimeGrid.default(ChainConfig(6, 1.0, 0.0, 1.0))
    assert d.dt == pytest.approx(0.02 / math.sqrt(2))
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.1)


def test_two_site_chain_closed_form():
    rec = run_transfer(ChainConfig(2, 1.0, 0.0, 0.0))
    assert rec.transferred
    assert rec.t_opt == pytest.approx(math.pi / (2 * math.sqrt(2)), abs=1e-9)
    assert rec.e_max == pytest.approx(1.0, abs=1e-9)
    assert rec.concurrence[0] == 0.0


@pytest.mark.parametrize("channel", [Channel.ground(), Channel.thermal(0.7)])
def test_engine_matches_full_register(channel):
    cfg = ChainConfig(3, 1.0, 0.4, 0.6, eps=1e-3)
    eng = TransferEngine(cfg, channel)
    for t in (0.0, 0.37, 1.9):
        a, x, y, b, z = (v[0] for v in eng.components([t]))
        pair = brute_pair(cfg, channel, t)
        assert pair.is_x
        assert (a, x, y, b) == pytest.approx((pair.a, pair.x, pair.y, pair.b), abs=1e-12)
        assert abs(z - pair.z) < 1e-12
        c = 2 * max(0.0, abs(z) - math.sqrt(a * b))
        assert c == pytest.approx(concurrence_general(pair), abs=1e-9)
        assert 0.5 * (x + y - 2 * z.real) == pytest.approx(singlet_fraction(pair), abs=1e-12)


def test_slope_matches_finite_difference():
    eng = TransferEngine(ChainConfig(4, 1.0, -0.3, 0.5), Channel.ground())
    for t in (2.1, 5.0):
        h = 1e-6
        c_p, _ = eng.concurrence_and_slope(t + h)
        c_m, _ = eng.concurrence_and_slope(t - h)
        _, s = eng.concurrence_and_slope(t)
        assert s == pytest.approx((c_p - c_m) / (2 * h), rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("d", [0.0, 0.5, 1.5])
def test_lab_frame_equals_rotated_chain(d):
    cfg = ChainConfig(4, 1.0, -0.4, d)
    lab = run_transfer(cfg, time_grid=SHORT)
    rot = run_transfer(cfg.modified(), time_grid=SHORT)
    assert np.abs(lab.concurrence - rot.concurrence).max() < 1e-10
    assert lab.e_max == pytest.approx(rot.e_max, abs=1e-10)


def test_xx_topt_scales_with_jtilde():
    vals = [run_transfer(ChainConfig(2, 1.0, 0.0, d)).t_opt * math.hypot(1.0, d) for d in (0.0, 0.7, 2.0)]
    assert np.ptp(vals) < 1e-9


def test_no_transfer_record():
    rec = run_transfer(ChainConfig(4, 1.0, 0.0, 0.0), time_grid=TimeGrid(0.05, 0.01))
    assert not rec.transferred
    assert math.isnan(rec.t_opt) and rec.e_max == 0.0


def test_peak_helpers():
    t = np.linspace(0, 3, 31)
    c = np.sin(t) ** 2
    k = first_peak_index(c)
    assert t[k] == pytest.approx(math.pi / 2, abs=0.1)
    assert quadratic_vertex(t, c, k) == pytest.approx(math.pi / 2, abs=1e-3)
    assert first_peak_index(np.zeros(10)) is None
    assert first_peak_index(np.full(5, 1e-4) * np.array([0, 1, 2, 1, 0])) is None


def test_large_beta_matches_ground():
    cfg = ChainConfig(4, 1.0, 0.3, 0.8)
    g = run_transfer(cfg, Channel.ground(), SHORT)
    th = run_transfer(cfg, Channel.thermal(1e4), SHORT)
    assert th.e_max == pytest.approx(g.e_max, abs=1e-10)
    assert th.t_opt == pytest.approx(g.t_opt, abs=1e-10)


def test_infinite_temperature_gives_no_entanglement_at_start():
    rec = run_transfer(ChainConfig(4, 1.0, 0.3, 0.8), Channel.thermal(0.0), SHORT)
    assert rec.concurrence[0] == 0.0
    assert np.all((rec.concurrence >= 0) & (rec.concurrence <= 1))


def test_spin_wave_velocity():
    assert spin_wave_velocity(0.0) == pytest.approx(2.0)
    assert spin_wave_velocity(0.5, 2.0) == pytest.approx(2 * math.pi * math.sin(math.pi / 3) / (math.pi / 3))
    for bad in (1.0, -1.0, 1.5):
        with pytest.raises(ValueError):
            spin_wave_velocity(bad)
    v = [spin_wave_velocity(dl) for dl in np.linspace(-0.9, 0.9, 7)]
    assert np.all(np.diff(v) > 0)


def test_check_grid():
    assert list(check_grid([3, 2, 1])) == [3, 2, 1]
    for bad in ([], [1, 1], [1, 3, 2]):
        with pytest.raises(ValueError):
            check_grid(bad)


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv("SPINWIRE_THREADS", "4")
    assert parallel_map(lambda v: v * v, range(20)) == [v * v for v in range(20)]
    monkeypatch.setenv("SPINWIRE_THREADS", "-1")
    with pytest.raises(ValueError):
        parallel_map(abs, [1, 2])


@pytest.mark.filterwarnings("ignore::spinwire.dynamics.DegeneracyWarning")
def test_sweep_delta_shape_and_thread_independence(monkeypatch):
    tpl = ChainConfig(4, 1.0, 0.0, 0.0)
    grid = np.linspace(-1.5, 1.5, 7)
    monkeypatch.setenv("SPINWIRE_THREADS", "1")
    serial = sweep_delta(tpl, grid, [0.0, 1.0], time_grid=SHORT)
    monkeypatch.setenv("SPINWIRE_THREADS", "4")
    threaded = sweep_delta(tpl, grid, [0.0, 1.0], time_grid=SHORT)
    assert len(serial.points) == 14
    assert serial.points == threaded.points
    assert len(serial.series("e_max", d=1.0)) == 7


def test_sweep_records_errors():
    tpl = ChainConfig(3, 1.0, 0.0, 0.0)
    with pytest.warns(Warning):
        res = sweep_delta(tpl, [0.0, 0.5], [0.0], time_grid=SHORT)
    assert all(p.error == "" for p in res.points)
    strict = sweep_delta(tpl, [0.0, 0.5], [0.0], time_grid=SHORT, tie_break=False)
    assert all("eps > 0" in p.error for p in strict.points)
    assert all(math.isnan(p.e_max) for p in strict.points)


def test_sweep_d_and_thermal():
    tpl = ChainConfig(4, 1.0, 0.5, 0.0)
    res = sweep_d(tpl, [0.0, 1.0, 2.0], [0.5], time_grid=SHORT)
    assert [p.d for p in res.points] == [0.0, 1.0, 2.0]
    th = sweep_thermal(tpl, [0.5, 2.0], [0.0, 1.0], time_grid=SHORT)
    assert [p.axis_value for p in th.points] == [0.5, 2.0, 0.5, 2.0]
    with pytest.raises(ValueError):
        sweep_thermal(tpl, [-1.0, 1.0], [0.0])


def test_phi_sweep_labels():
    res = sweep_phi_fixed_jtilde(1.0, [0.0], [0.0, 0.3], n_ch=2)
    assert [p.d for p in res.points] == pytest.approx([0.0, math.sin(0.3)])
    with pytest.raises(ValueError):
        sweep_phi_fixed_jtilde(-1.0, [0.0], [0.0])


def test_concurrence_invariant_under_local_phase_on_spectator():
    # a z rotation on 0' changes z by a phase only
    cfg = ChainConfig(3, 1.0, 0.2, 0.4, eps=1e-3)
    pair = brute_pair(cfg, Channel.ground(), 1.1)
    u = np.kron(np.diag([1, np.exp(0.7j)]), np.eye(2))
    rotated = u @ pair.rho4 @ u.conj().T
    assert concurrence_general(rotated) == pytest.approx(concurrence_general(pair), abs=1e-10)
