import math
from dataclasses import replace

import numpy as np
import pytest

from robust_ed.dispatch import C_MINUS, C_PLUS
from robust_ed.grid import grid_from_dict
from robust_ed.sim import (FIELDS_INTERVAL, FIELDS_METRICS, FIELDS_SWEEP, SimConfig, SimData, daily_load_shape,
                           generate_demand, pareto_front, run_rolling_horizon, sweep_gamma, synthetic_data,
                           synthetic_wind_models, write_metrics, write_rows)
from robust_ed.uncertainty import SetSpec
from robust_ed.windstats import SeasonalModel, VarModel, WindSeries

from conftest import toy_grid_dict

N = 40


@pytest.fixture(scope="module")
def data14(grid14):
    return synthetic_data(grid14, days=1, train_days=3, seed=3)


def _rob(kind="dus", gw=0.5, gd=0.0, lags=2, **kw):
    return SimConfig(policy="rob", spec=SetSpec(kind=kind, gamma_w=gw, gamma_d=gd, lags=lags), **kw)


# ------------------------------------------------------------------ demand
def test_demand_noise_statistics():
    d = generate_demand(np.full(10_000, 100.0), seed=0)
    assert 99 <= d.mean() <= 101
    assert 4.5 <= d.std() <= 5.5


def test_demand_zero_mean_and_seeding():
    assert np.all(generate_demand(np.zeros((5, 3)), 1) == 0)
    mu = np.full((50, 2), 30.0)
    assert np.array_equal(generate_demand(mu, 9), generate_demand(mu, 9))
    assert not np.array_equal(generate_demand(mu, 9), generate_demand(mu, 10))
    with pytest.raises(ValueError):
        generate_demand([-1.0], 0)


def test_daily_shape_range_and_mean():
    assert daily_load_shape(np.arange(144)).mean() == pytest.approx(1.0, abs=1e-12)
    fine = 252.5 * daily_load_shape(np.linspace(0, 144, 200_001))
    assert fine.min() == pytest.approx(132.6, abs=0.01)
    assert fine.max() == pytest.approx(319.1, abs=0.01)
    assert 252.5 * daily_load_shape(21) == pytest.approx(132.6, abs=0.01)  # 03:30


def test_synthetic_wind_models_target_radius():
    seasonal, var = synthetic_wind_models(4, 2, 0.8)
    assert var.spectral_radius() == pytest.approx(0.8, abs=1e-9)
    assert np.all(seasonal.coef[:, 0] > 0)


# ---------------------------------------------------------------- config
def test_config_checks():
    with pytest.raises(ValueError):
        SimConfig(T=1)
    with pytest.raises(ValueError):
        SimConfig(c_plus=-1)
    with pytest.raises(ValueError):
        SimConfig(policy="greedy")
    with pytest.raises(ValueError):
        SimConfig(refit_every=0)


def test_data_must_cover_horizon(grid14, data14):
    with pytest.raises(ValueError):
        run_rolling_horizon(grid14, data14, SimConfig(), n_intervals=10_000)


# -------------------------------------------------------------- equivalence
def test_zero_budget_rob_equals_look_ahead(grid14, data14):
    la = run_rolling_horizon(grid14, data14, SimConfig(policy="la", spec=SetSpec(lags=2)), N)
    rob = run_rolling_horizon(grid14, data14, _rob(gw=0.0), N)
    assert rob.cost == pytest.approx(la.cost, rel=1e-6)
    assert not rob.fallback.any()


def test_fixed_models_skip_refits(grid14, data14):
    models = synthetic_wind_models(4, 2)
    a = run_rolling_horizon(grid14, data14, _rob(), N, models=models)
    b = run_rolling_horizon(grid14, data14, _rob(), N, models=models)
    assert np.array_equal(a.cost, b.cost)


# ---------------------------------------------------------------- properties
@pytest.mark.parametrize("cfg", [SimConfig(policy="la", spec=SetSpec(lags=2), refit_every=7),
                                 _rob(refit_every=7)], ids=["la", "rob"])
def test_causality(grid14, data14, cfg):
    cut = 20
    base = run_rolling_horizon(grid14, data14, cfg, N)
    k = data14.start + cut
    speeds = data14.wind.speeds.copy()
    speeds[k + 1:] = speeds[k + 1:] * 1.7 + 2.0
    demand = data14.demand.copy()
    demand[k + 1:] *= 0.6
    future = SimData(WindSeries(data14.wind.start, speeds), demand, data14.demand_mean, data14.start)
    pert = run_rolling_horizon(grid14, future, cfg, N)
    assert np.array_equal(base.pg[:cut + 1], pert.pg[:cut + 1])
    assert np.array_equal(base.cost[:cut + 1], pert.cost[:cut + 1])
    assert not np.array_equal(base.cost, pert.cost)


@pytest.mark.parametrize("cfg", [SimConfig(policy="la", spec=SetSpec(lags=2)),
                                 SimConfig(policy="res-la", spec=SetSpec(lags=2)),
                                 _rob(), _rob("sus2", 0.7)], ids=["la", "res-la", "dus", "sus2"])
def test_ramp_continuity_and_accounting(grid14, data14, cfg):
    m = run_rolling_horizon(grid14, data14, cfg, N)
    steps = np.diff(m.pg, axis=0)
    assert np.all(steps <= grid14.gen_array("ramp_up") + 1e-7)
    assert np.all(-steps <= grid14.gen_array("ramp_down") + 1e-7)
    assert math.fsum(m.penalty) == m.penalty_avg * m.n
    assert m.penalty == pytest.approx((C_PLUS * m.s_plus + C_MINUS * m.s_minus) / 6, rel=1e-12, abs=0)
    assert m.penalty_freq == 100.0 * np.count_nonzero(m.penalty) / m.n
    assert m.cost_std == pytest.approx(math.sqrt(np.mean((m.cost - m.cost.mean()) ** 2)))
    assert np.all(m.cost >= m.penalty)


def test_determinism(grid14, data14):
    a = run_rolling_horizon(grid14, data14, _rob("sus1"), N)
    b = run_rolling_horizon(grid14, data14, _rob("sus1"), N)
    assert a.summary() == b.summary()
    for f in ("cost", "penalty", "pg", "pw", "iters"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_steady_state_under_constant_inputs():
    g = grid_from_dict(toy_grid_dict(loads=(100.0,)))
    n = 60
    wind = WindSeries(0, np.full((n, 1), 6.0))
    d = np.full((n, 1), 100.0)
    data = SimData(wind, d, d, 10)
    models = (SeasonalModel.constant([6.0]), VarModel(np.zeros((1, 1, 1)), np.array([[0.25]])))
    for cfg in (SimConfig(policy="la"), _rob(gw=0.5, lags=1)):
        m = run_rolling_horizon(g, data, cfg, 40, models=models)
        assert np.all(m.penalty == 0)
        assert np.array_equal(m.pg[-10:], np.repeat(m.pg[-1:], 10, axis=0))


# -------------------------------------------------------------------- sweeps
def test_sweep_rows_and_zero_row(grid14, data14):
    cfg = SimConfig(spec=SetSpec(lags=2))
    rows = sweep_gamma(grid14, data14, [0.0, 0.5], [0.0], ["dus", "sus2", "nope"], cfg, 12)
    assert len(rows) == 3 * 2 * 1
    assert [r["status"] == "ok" for r in rows] == [True] * 4 + [False] * 2
    la = run_rolling_horizon(grid14, data14, replace(cfg, policy="la"), 12)
    assert {k: rows[0][k] for k in FIELDS_METRICS} == la.summary()
    with pytest.raises(ValueError):
        sweep_gamma(grid14, data14, [], [0.0])


def test_pareto_front():
    pts = [(1, 5), (2, 2), (3, 3), (5, 1), (2, 2)]
    assert list(pareto_front(pts)) == [0, 1, 3, 4]


# ------------------------------------------------------------------------ io
def test_metric_files(tmp_path, grid14, data14):
    m = run_rolling_horizon(grid14, data14, SimConfig(policy="la", spec=SetSpec(lags=2)), 5)
    mp, ip = write_metrics(m, tmp_path, {"policy": "la"})
    lines = mp.read_text().splitlines()
    assert lines[0] == ",".join(("policy",) + FIELDS_METRICS)
    assert lines[1].startswith("la,")
    rows = ip.read_text().splitlines()
    assert rows[0] == ",".join(FIELDS_INTERVAL)
    assert len(rows) == 6


def test_negative_zero_is_written_as_zero(tmp_path):
    write_rows(tmp_path / "x.csv", [{"variant": "dus", "gamma_w": -0.0}], FIELDS_SWEEP)
    assert (tmp_path / "x.csv").read_text().splitlines()[1] == "dus,0" + "," * (len(FIELDS_SWEEP) - 2)
