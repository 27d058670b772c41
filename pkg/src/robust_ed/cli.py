"""Command-line entry point: ``robust-ed {estimate,solve,simulate,sweep}``.

Every command writes CSV/JSON files into ``--out``.  Without ``--wind`` the
commands run on seeded synthetic wind, so ``--seed`` alone fixes the inputs.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ccg import solve_robust_ed
from .dispatch import build_first_stage, build_second_stage, solve_la_ed, solve_res_la_ed
from .grid import load_grid
from .sim import (DEMAND_REL_STD, FIELDS_SWEEP, SimConfig, load_profile, pareto_front, run_rolling_horizon,
                  sim_data_from_wind, sweep_gamma, synthetic_data, synthetic_wind_models, write_metrics,
                  write_rows)
from .uncertainty import SetSpec, build_demand_set, build_wind_trajectory_set, nominal_wind_power, product_set
from .windstats import (PERIODS_PER_DAY, WindSeries, fit_seasonal, fit_var, load_models, read_wind_csv,
                        residuals, save_models, simulate_wind, VarModel)


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robust-ed", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--grid", default="14bus", help="grid JSON file or bundled fixture name")
        sp.add_argument("--wind", help="wind CSV (timestamp,site_1,...); synthetic if omitted")
        sp.add_argument("--model", help="fitted model JSON from 'estimate'")
        sp.add_argument("--lags", type=int, default=2, help="VAR order")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".", help="output directory")

    def policy(sp, gamma_help):
        sp.add_argument("--policy", choices=("la", "res-la", "rob"), default="rob")
        sp.add_argument("--gamma-w", default="0", help=gamma_help)
        sp.add_argument("--gamma-d", default="0", help=gamma_help)
        sp.add_argument("--gamma-t", type=float, default=None, help="time budget (off by default)")
        sp.add_argument("--variant", default="dus", help="dus, sus1 or sus2")
        sp.add_argument("--T", type=int, default=9, help="look-ahead periods")
        sp.add_argument("--res-factor", type=float, default=0.05)

    sp = sub.add_parser("estimate", help="fit the seasonal and VAR wind models")
    common(sp)
    sp.add_argument("--days", type=float, default=14.0, help="synthetic history length")

    sp = sub.add_parser("solve", help="one dispatch decision at the last row of the wind series")
    common(sp)
    policy(sp, "budget")
    sp.add_argument("--days", type=float, default=14.0, help="synthetic history length")

    for name, text in (("simulate", "rolling-horizon simulation"), ("sweep", "budget sweep (frontier table)")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        policy(sp, "budget" if name == "simulate" else "comma-separated budgets")
        sp.add_argument("--days", type=float, default=1.0, help="simulated days")
        sp.add_argument("--train-days", type=float, default=14.0, help="history before the first interval")
    return p


# ------------------------------------------------------------------- inputs
def _wind(args, grid, days: float) -> WindSeries:
    if args.wind:
        return read_wind_csv(args.wind)
    seasonal, var = synthetic_wind_models(grid.n_wind)
    n = int(round(days * PERIODS_PER_DAY))
    return simulate_wind(seasonal, var, args.seed, n, start=0, burn_in=200)


def _models(args, wind: WindSeries):
    if args.model:
        return load_models(args.model)
    seasonal = fit_seasonal(wind)
    return seasonal, fit_var(residuals(wind, seasonal), args.lags)


def _spec(args, kind=None, gw=None, gd=None) -> SetSpec:
    lags = args.lags
    if args.model:
        lags = load_models(args.model)[1].lags
    return SetSpec(kind or args.variant, _floats(args.gamma_w)[0] if gw is None else gw,
                   _floats(args.gamma_d)[0] if gd is None else gd, args.gamma_t, lags)


def _config(args, spec: SetSpec) -> SimConfig:
    return SimConfig(T=args.T, policy=args.policy, spec=spec, res_factor=args.res_factor, seed=args.seed)


def _sim_data(args, grid):
    if args.wind:
        return sim_data_from_wind(grid, read_wind_csv(args.wind), args.train_days, args.seed + 1)
    return synthetic_data(grid, args.days, args.train_days, args.seed, args.T)


def _n_intervals(args, data) -> int:
    avail = data.n_rows - data.start - (args.T - 1)
    return min(avail, int(round(args.days * PERIODS_PER_DAY)))


# ----------------------------------------------------------------- commands
def cmd_estimate(args) -> dict:
    grid = load_grid(args.grid)
    wind = _wind(args, grid, args.days)
    seasonal = fit_seasonal(wind)
    var = fit_var(residuals(wind, seasonal), args.lags)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_models(out / "model.json", seasonal, var, rows=len(wind), first_period=wind.start,
                spectral_radius=var.spectral_radius())
    return {"model": str(out / "model.json"), "spectral_radius": var.spectral_radius()}


def cmd_solve(args) -> dict:
    grid = load_grid(args.grid)
    T = args.T
    wind = _wind(args, grid, args.days)
    seasonal, var = _models(args, wind)
    curves = [w.power_curve for w in grid.windfarms]
    t1 = int(wind.periods[-1])
    L = max(var.lags, 1)
    if len(wind) < L:
        raise ValueError(f"wind series needs at least {L} rows")
    hist = wind.speeds[-L:]
    d = load_profile(grid, t1 + np.arange(T))
    pbar1 = np.array([c.available(v) for c, v in zip(curves, wind.speeds[-1])])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = {"policy": args.policy, "period": t1}
    if args.policy == "rob":
        spec = _spec(args)
        if spec.kind != "dus":
            # the static sets keep only the innovation covariance
            var = VarModel(np.zeros((0, var.n_sites, var.n_sites)), var.sigma)
        W = build_wind_trajectory_set(seasonal, var, hist, spec, curves, T, t1)
        D = build_demand_set(d[1:], np.maximum(DEMAND_REL_STD * d[1:], 1e-9), spec.gamma_d)
        s1 = build_first_stage(grid, d[0], pbar1)
        res = solve_robust_ed(s1, build_second_stage(grid, T), product_set(D, W), trace_path=out / "trace.csv")
        sched = res.schedule
        result.update(objective=res.ub, lower_bound=res.lb, iterations=res.iterations, converged=res.converged)
    else:
        fp = np.vstack([pbar1, nominal_wind_power(seasonal, var, hist, curves, T, t1)])
        if args.policy == "la":
            sched = solve_la_ed(grid, d, fp, T)
        else:
            sched = solve_res_la_ed(grid, d, fp, T, args.res_factor)
        result["objective"] = sched.objective
    _write_schedule(out / "schedule.csv", grid, sched)
    return result


def _write_schedule(path, grid, sched) -> None:
    fields = (["period"] + [f"pg_{i + 1}" for i in range(grid.n_gens)] + [f"pw_{i + 1}" for i in range(grid.n_wind)]
              + ["s_plus", "s_minus"])
    rows = []
    for t in range(sched.T):
        vals = [t + 1, *sched.pg[t], *sched.pw[t], sched.s_plus[t], sched.s_minus[t]]
        rows.append(dict(zip(fields, vals)))
    write_rows(path, rows, fields)


def cmd_simulate(args) -> dict:
    grid = load_grid(args.grid)
    data = _sim_data(args, grid)
    models = load_models(args.model) if args.model else None
    cfg = _config(args, _spec(args))
    m = run_rolling_horizon(grid, data, cfg, _n_intervals(args, data), models)
    label = {"policy": args.policy, "variant": cfg.spec.kind, "gamma_w": cfg.spec.gamma_w,
             "gamma_d": cfg.spec.gamma_d}
    write_metrics(m, args.out, label)
    return m.summary()


def cmd_sweep(args) -> dict:
    grid = load_grid(args.grid)
    data = _sim_data(args, grid)
    models = load_models(args.model) if args.model else None
    variants = [v.strip() for v in args.variant.split(",") if v.strip()]
    cfg = _config(args, _spec(args, variants[0], 0.0, 0.0))
    rows = sweep_gamma(grid, data, _floats(args.gamma_w), _floats(args.gamma_d), variants, cfg,
                       _n_intervals(args, data), models)
    ok = [i for i, r in enumerate(rows) if r["status"] == "ok"]
    front = set(np.asarray(ok)[pareto_front([(rows[i]["cost_avg"], rows[i]["cost_std"]) for i in ok])]) if ok \
        else set()
    for i, r in enumerate(rows):
        r["pareto"] = int(i in front)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "frontier.csv", rows, FIELDS_SWEEP + ("pareto",))
    return {"cells": len(rows), "failed": len(rows) - len(ok)}


COMMANDS = {"estimate": cmd_estimate, "solve": cmd_solve, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"robust-ed {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
