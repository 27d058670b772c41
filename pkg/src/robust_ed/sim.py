"""Rolling-horizon simulation of dispatch policies on wind and demand series.

Every 10-minute interval the simulator observes current demand and available
wind, builds forecasts (and uncertainty sets for the robust policy) from the
models fitted so far, solves the look-ahead problem, implements only the
first period and moves on.  Wind models are refitted once a day from the data
observed up to that point.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .ccg import solve_robust_ed
from .dispatch import (C_MINUS, C_PLUS, DispatchSchedule, MasterLP, build_first_stage, build_second_stage,
                       interval_cost, pack_xi, solve_la_ed, solve_res_la_ed)
from .grid import Grid
from .lp import LpError
from .uncertainty import (EmptySetError, SetSpec, build_demand_set, build_wind_trajectory_set,
                          nominal_wind_power, product_set)
from .windstats import (PERIODS_PER_DAY, SeasonalModel, VarModel, WindSeries, fit_seasonal, fit_var,
                        residuals, simulate_wind)

DEMAND_REL_STD = 0.05
DEMAND_PHASE = 15.5 / 24  # midpoint between the two daily peaks

Policy = Literal["la", "res-la", "rob"]


@dataclass(frozen=True)
class SimConfig:
    """Rolling-horizon settings.

    ``window_days=None`` refits on all history observed so far; otherwise only
    on the trailing window.  ``spec.lags`` is also the VAR order behind the
    look-ahead forecasts.
    """

    T: int = 9
    policy: Policy = "la"
    spec: SetSpec = SetSpec()
    res_factor: float = 0.05
    c_plus: float = C_PLUS
    c_minus: float = C_MINUS
    refit_every: int = PERIODS_PER_DAY
    window_days: float | None = None
    eps: float = 1e-4
    max_iter: int = 50
    delta: float = 1e-6
    max_alternations: int = 100
    ad_restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise ValueError("look-ahead horizon T must be at least 2")
        if self.c_plus < 0 or self.c_minus < 0:
            raise ValueError("penalties must be nonnegative")
        if self.policy not in ("la", "res-la", "rob"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.refit_every < 1:
            raise ValueError("refit_every must be positive")


@dataclass
class SimData:
    """Aligned wind and demand rows; simulation starts at row ``start``.

    ``demand_mean`` is the known mean profile (the demand forecast) and must
    extend ``T - 1`` rows past the last simulated interval.
    """

    wind: WindSeries
    demand: np.ndarray
    demand_mean: np.ndarray
    start: int

    def __post_init__(self):
        self.demand = np.atleast_2d(np.asarray(self.demand, float))
        self.demand_mean = np.atleast_2d(np.asarray(self.demand_mean, float))
        if self.demand.shape[0] != len(self.wind) or self.demand_mean.shape[0] != len(self.wind):
            raise ValueError("wind, demand and demand-mean rows must align")
        if not 0 < self.start <= len(self.wind):
            raise ValueError("start must leave some history before the first interval")

    @property
    def n_rows(self) -> int:
        return len(self.wind)


FIELDS_INTERVAL = ("t", "cost", "penalty", "s_plus", "s_minus", "thermal_mw", "wind_mw", "solver_iters",
                   "solve_ms")
FIELDS_METRICS = ("cost_avg", "cost_std", "penalty_avg", "penalty_freq", "thermal_avg", "wind_avg",
                  "intervals", "fallbacks")


@dataclass
class SimMetrics:
    """Per-interval records and their aggregates.

    ``cost_std`` is the population standard deviation; ``penalty_freq`` is the
    percentage of intervals with a positive penalty.
    """

    t: np.ndarray
    cost: np.ndarray
    penalty: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    thermal: np.ndarray
    wind: np.ndarray
    iters: np.ndarray
    solve_ms: np.ndarray
    fallback: np.ndarray
    pg: np.ndarray = field(repr=False, default=None)
    pw: np.ndarray = field(repr=False, default=None)
    objective: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.cost.size

    @property
    def cost_avg(self) -> float:
        return math.fsum(self.cost) / self.n

    @property
    def cost_std(self) -> float:
        return float(np.std(self.cost))

    @property
    def penalty_avg(self) -> float:
        return math.fsum(self.penalty) / self.n

    @property
    def penalty_freq(self) -> float:
        return 100.0 * np.count_nonzero(self.penalty > 0) / self.n

    @property
    def thermal_avg(self) -> float:
        return math.fsum(self.thermal) / self.n

    @property
    def wind_avg(self) -> float:
        return math.fsum(self.wind) / self.n

    def summary(self) -> dict:
        return {"cost_avg": self.cost_avg, "cost_std": self.cost_std, "penalty_avg": self.penalty_avg,
                "penalty_freq": self.penalty_freq, "thermal_avg": self.thermal_avg, "wind_avg": self.wind_avg,
                "intervals": self.n, "fallbacks": int(self.fallback.sum())}

    def interval_rows(self):
        for k in range(self.n):
            yield {"t": int(self.t[k]), "cost": self.cost[k], "penalty": self.penalty[k],
                   "s_plus": self.s_plus[k], "s_minus": self.s_minus[k], "thermal_mw": self.thermal[k],
                   "wind_mw": self.wind[k], "solver_iters": int(self.iters[k]), "solve_ms": self.solve_ms[k]}


# -------------------------------------------------------------- data helpers
def daily_load_shape(periods) -> np.ndarray:
    """Mean-one daily demand pattern spanning [0.5251, 1.2638] of the mean.

    On the 14-bus fixture (mean 252.5 MW) that is 132.6 MW at the 03:30 trough
    and 319.1 MW at the two daytime peaks, about 2.1 h either side of 15:30.
    """
    tau = (np.asarray(periods, float) % PERIODS_PER_DAY) / PERIODS_PER_DAY
    theta = 2 * np.pi * (tau - DEMAND_PHASE)
    return 1.0 + 0.366850 * np.cos(theta) - 0.108001 * np.cos(2 * theta)


def load_profile(grid: Grid, periods) -> np.ndarray:
    """Mean demand per load at the given absolute periods (periods x loads)."""
    return np.outer(daily_load_shape(periods), grid.load_means)


def generate_demand(mean_profile, seed: int) -> np.ndarray:
    """Independent normal demand with a 5% relative std, clipped at zero."""
    mu = np.asarray(mean_profile, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean demand must be nonnegative")
    rng = np.random.default_rng(seed)
    return np.maximum(0.0, mu + DEMAND_REL_STD * mu * rng.standard_normal(mu.shape))


def synthetic_wind_models(n_sites: int = 4, lags: int = 2, radius: float = 0.8, level: float = 8.0,
                          innovation_std: float = 0.8, correlation: float = 0.6,
                          seed: int = 7) -> tuple[SeasonalModel, VarModel]:
    """Ground-truth seasonal + VAR model for synthetic correlated wind.

    Lag matrices get a dominant diagonal plus weak random cross terms and are
    rescaled so the companion spectral radius equals ``radius``.
    """
    rng = np.random.default_rng(seed)
    coef = np.zeros((n_sites, 5))
    coef[:, 0] = level + rng.uniform(-0.5, 0.5, n_sites)
    coef[:, 1] = 1.2
    coef[:, 2] = 0.6
    coef[:, 3] = 0.4
    coef[:, 4] = -0.2
    A = np.zeros((lags, n_sites, n_sites))
    diag = [1.1, -0.24] + [0.0] * max(0, lags - 2)
    for s in range(lags):
        A[s] = diag[s] * np.eye(n_sites) + 0.03 * rng.standard_normal((n_sites, n_sites)) * (s == 0)
    base = VarModel(A, np.eye(n_sites)).spectral_radius()
    # scaling A_s by f**s scales every companion eigenvalue by f
    f = radius / base
    A = np.stack([A[s] * f ** (s + 1) for s in range(lags)])
    sigma = innovation_std ** 2 * ((1 - correlation) * np.eye(n_sites) + correlation * np.ones((n_sites, n_sites)))
    return SeasonalModel(coef), VarModel(A, sigma)


def synthetic_data(grid: Grid, days: float, train_days: float = 14.0, seed: int = 0, T: int = 9,
                   models: tuple[SeasonalModel, VarModel] | None = None) -> SimData:
    """Seeded synthetic wind (from :func:`synthetic_wind_models`) and demand.

    Rows cover ``train_days`` of history, ``days`` of simulation and ``T``
    spare rows so forecasts never run off the end.
    """
    seasonal, var = models or synthetic_wind_models(grid.n_wind)
    start = int(round(train_days * PERIODS_PER_DAY))
    n = start + int(round(days * PERIODS_PER_DAY)) + T
    wind = simulate_wind(seasonal, var, seed, n, start=0, burn_in=200)
    return sim_data_from_wind(grid, wind, train_days, seed + 1)


def sim_data_from_wind(grid: Grid, wind: WindSeries, train_days: float = 14.0, seed: int = 0) -> SimData:
    """Pair a wind series with seeded demand; the first ``train_days`` are history only."""
    if wind.n_sites != grid.n_wind:
        raise ValueError(f"wind series has {wind.n_sites} sites, grid has {grid.n_wind} wind farms")
    start = int(round(train_days * PERIODS_PER_DAY))
    if not 0 < start < len(wind):
        raise ValueError("training period must leave rows to simulate")
    mean = load_profile(grid, wind.periods)
    return SimData(wind, generate_demand(mean, seed), mean, start)


# ----------------------------------------------------------------- the loop
@dataclass
class _Fitted:
    seasonal: SeasonalModel
    var_dyn: VarModel
    var_static: VarModel


def _fit(speeds: WindSeries, lags: int) -> _Fitted:
    seasonal = fit_seasonal(speeds)
    res = residuals(speeds, seasonal)
    return _Fitted(seasonal, fit_var(res, lags), fit_var(res, 0))


def run_rolling_horizon(grid: Grid, data: SimData, cfg: SimConfig, n_intervals: int | None = None,
                        models: tuple[SeasonalModel, VarModel] | None = None,
                        fit_cache: dict | None = None) -> SimMetrics:
    """Simulate ``n_intervals`` intervals starting at ``data.start``.

    ``models`` fixes the wind models (no refitting); the static set kinds then
    use the same seasonal part with an L=0 fit of B taken from ``sigma``.
    ``fit_cache`` may be shared between runs on the same data to skip repeated
    refits.
    """
    curves = [w.power_curve for w in grid.windfarms]
    T, spec = cfg.T, cfg.spec
    L = spec.lags if models is None else models[1].lags
    k0 = data.start
    n_int = data.n_rows - k0 - (T - 1) if n_intervals is None else int(n_intervals)
    if n_int <= 0 or k0 + n_int + T - 1 > data.n_rows:
        raise ValueError("data do not cover the simulated intervals plus the look-ahead horizon")
    if k0 < max(L, 1):
        raise ValueError("not enough history before the first interval")
    speeds = data.wind.speeds
    if speeds.shape[1] != grid.n_wind or data.demand.shape[1] != grid.n_loads:
        raise ValueError("data do not match the grid's wind-farm and load counts")
    stage2 = build_second_stage(grid, T, cfg.c_plus, cfg.c_minus)
    fixed = None
    if models is not None:
        seasonal, var = models
        fixed = _Fitted(seasonal, var, VarModel(np.zeros((0, var.n_sites, var.n_sites)), var.sigma))
    cache = {} if fit_cache is None else fit_cache

    # initial dispatch: single-period ED on the first observation, no ramps
    pbar0 = np.array([c.available(v) for c, v in zip(curves, speeds[k0 - 1])])
    init = solve_la_ed(grid, data.demand[k0 - 1][None], pbar0[None], 1, None, cfg.c_plus, cfg.c_minus)
    p0 = (init.pg[0], init.pw[0])

    rec = {k: np.zeros(n_int) for k in ("cost", "penalty", "s_plus", "s_minus", "thermal", "wind", "solve_ms",
                                        "objective")}
    iters = np.zeros(n_int, int)
    fallback = np.zeros(n_int, bool)
    pg_hist = np.zeros((n_int, grid.n_gens))
    pw_hist = np.zeros((n_int, grid.n_wind))
    fitted = fixed
    # warm solvers carried from one interval to the next
    ctx: dict = {"master": None, "set": None}
    for j in range(n_int):
        k = k0 + j
        if fixed is None and (j % cfg.refit_every == 0):
            lo = 0 if cfg.window_days is None else max(0, k - int(round(cfg.window_days * PERIODS_PER_DAY)))
            key = (lo, k, L)
            if key not in cache:
                cache[key] = _fit(data.wind.window(lo, k), L)
            fitted = cache[key]
        t1 = data.wind.start + k
        d1 = data.demand[k]
        pbar1 = np.array([c.available(v) for c, v in zip(curves, speeds[k])])
        dbar = data.demand_mean[k + 1:k + T]
        hist = speeds[k - max(L, 1) + 1:k + 1]
        tic = time.perf_counter()
        sched, n_it, failed = _decide(grid, cfg, stage2, fitted, curves, hist, t1, d1, pbar1, dbar, p0, ctx)
        rec["solve_ms"][j] = 1e3 * (time.perf_counter() - tic)
        iters[j], fallback[j] = n_it, failed
        rec["objective"][j] = sched.objective
        pg, pw = sched.pg[0], sched.pw[0]
        sp, sm = float(sched.s_plus[0]), float(sched.s_minus[0])
        # LP noise below 1e-9 MW is not a penalty event
        sp = sp if sp > 1e-9 else 0.0
        sm = sm if sm > 1e-9 else 0.0
        cost, pen = interval_cost(grid, pg, pw, sp, sm, cfg.c_plus, cfg.c_minus)
        rec["cost"][j], rec["penalty"][j] = cost, pen
        rec["s_plus"][j], rec["s_minus"][j] = sp, sm
        rec["thermal"][j], rec["wind"][j] = pg.sum(), pw.sum()
        pg_hist[j], pw_hist[j] = pg, pw
        p0 = (pg, pw)
    return SimMetrics(np.arange(k0, k0 + n_int), rec["cost"], rec["penalty"], rec["s_plus"], rec["s_minus"],
                      rec["thermal"], rec["wind"], iters, rec["solve_ms"], fallback, pg_hist, pw_hist,
                      rec["objective"])


def _master(ctx, stage1, stage2, xi) -> MasterLP:
    if ctx["master"] is None:
        ctx["master"] = MasterLP(stage1, stage2, [xi])
    return ctx["master"]


def _decide(grid, cfg: SimConfig, stage2, fitted: _Fitted, curves, hist, t1, d1, pbar1, dbar, p0, ctx):
    """Schedule for one interval: ``(schedule, iterations, fell_back)``."""
    T = cfg.T

    def look_ahead(res_factor=None):
        pb = nominal_wind_power(fitted.seasonal, fitted.var_dyn, hist, curves, T, t1, "dus")
        if res_factor is not None:
            return solve_res_la_ed(grid, np.vstack([d1, dbar]), np.vstack([pbar1, pb]), T, res_factor, p0, None,
                                   cfg.c_plus, cfg.c_minus, stage2)
        s1 = build_first_stage(grid, d1, pbar1, p0, cfg.c_plus, cfg.c_minus)
        xi = pack_xi(dbar, pb)
        master = _master(ctx, s1, stage2, xi).reset(s1, xi)
        sol = master.solve()
        return DispatchSchedule.from_vectors(master.x(sol), master.y(0, sol), grid.n_gens, grid.n_wind,
                                             sol.objective)

    if cfg.policy == "la":
        return look_ahead(), 1, False
    if cfg.policy == "res-la":
        return look_ahead(cfg.res_factor), 1, False
    spec = cfg.spec
    var = fitted.var_dyn if spec.kind == "dus" else fitted.var_static
    try:
        W = build_wind_trajectory_set(fitted.seasonal, var, hist, spec, curves, T, t1)
        D = build_demand_set(dbar, np.maximum(DEMAND_REL_STD * dbar, 1e-9), spec.gamma_d)
        X = product_set(D, W)
        if ctx["set"] is not None:
            X.share_solver(ctx["set"])
        ctx["set"] = X
        s1 = build_first_stage(grid, d1, pbar1, p0, cfg.c_plus, cfg.c_minus)
        res = solve_robust_ed(s1, stage2, X, cfg.eps, cfg.max_iter, "ad", cfg.delta, cfg.max_alternations,
                              cfg.ad_restarts, cfg.seed, master=_master(ctx, s1, stage2, X.nominal_xi))
    except (LpError, EmptySetError, ValueError):
        ctx["master"] = ctx["set"] = None
        return look_ahead(), 0, True
    if not (res.converged or res.stalled):
        return look_ahead(), res.iterations, True
    return res.schedule, res.iterations, False


# -------------------------------------------------------------------- sweeps
FIELDS_SWEEP = ("variant", "gamma_w", "gamma_d") + FIELDS_METRICS + ("status",)


def sweep_gamma(grid: Grid, data: SimData, gammas_w: Sequence[float], gammas_d: Sequence[float] = (0.0,),
                variants: Sequence[str] = ("dus",), cfg: SimConfig = SimConfig(), n_intervals: int | None = None,
                models=None) -> list[dict]:
    """One rolling-horizon run per (variant, gamma_w, gamma_d) cell, same data for all.

    A failing cell yields a row with ``status`` set to the error instead of
    aborting the sweep.
    """
    if not gammas_w or not gammas_d or not variants:
        raise ValueError("sweep lists must be nonempty")
    rows = []
    cache: dict = {}
    for v in variants:
        for gw in gammas_w:
            for gd in gammas_d:
                row = {"variant": v, "gamma_w": float(gw), "gamma_d": float(gd)}
                try:
                    spec = replace(cfg.spec, kind=v, gamma_w=float(gw), gamma_d=float(gd))
                    m = run_rolling_horizon(grid, data, replace(cfg, policy="rob", spec=spec), n_intervals,
                                            models, cache)
                    row.update(m.summary())
                    row["status"] = "ok"
                except Exception as exc:  # a failed cell must not abort the sweep
                    row.update({k: float("nan") for k in FIELDS_METRICS})
                    row["status"] = f"failed: {type(exc).__name__}: {exc}"
                rows.append(row)
    return rows


def pareto_front(points) -> np.ndarray:
    """Indices of (avg, std) points not dominated by any other point."""
    P = np.asarray(points, float)
    keep = []
    for i, p in enumerate(P):
        dom = np.all(P <= p, axis=1) & np.any(P < p, axis=1)
        if not dom.any():
            keep.append(i)
    return np.array(keep, int)


# ------------------------------------------------------------------------ io
def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v) + 0.0:.10g}"  # + 0.0 folds -0 into 0
    return v


def write_rows(path, rows, fields) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def write_metrics(metrics: SimMetrics, out_dir, label: dict | None = None) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = dict(label or {})
    summary.update(metrics.summary())
    fields = tuple(label or ()) + FIELDS_METRICS
    write_rows(out / "metrics.csv", [summary], fields)
    write_rows(out / "intervals.csv", metrics.interval_rows(), FIELDS_INTERVAL)
    return out / "metrics.csv", out / "intervals.csv"


def config_dict(cfg: SimConfig) -> dict:
    return asdict(cfg)
