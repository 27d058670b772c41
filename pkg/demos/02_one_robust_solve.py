"""One dispatch decision, look-ahead versus robust.

Builds the period-1 region and the compact second stage on the 14-bus
fixture, then solves the look-ahead dispatch and the robust dispatch for a
few wind budgets.  The trace shows the master lower bound climbing to the
worst-case upper bound as scenarios are added.

    python demos/02_one_robust_solve.py
"""
import numpy as np

from robust_ed import (SetSpec, build_demand_set, build_first_stage, build_second_stage, build_wind_trajectory_set,
                       fit_seasonal, fit_var, load_grid, product_set, solve_la_ed, solve_robust_ed, synthetic_data)
from robust_ed.uncertainty import nominal_wind_power
from robust_ed.windstats import residuals

T = 9
grid = load_grid("14bus")
data = synthetic_data(grid, days=1, train_days=14, seed=2)
hist = data.wind.window(0, data.start)
seasonal = fit_seasonal(hist)
var = fit_var(residuals(hist, seasonal), 6)

k = data.start
t1 = data.wind.start + k
recent = data.wind.speeds[k - 5:k + 1]
curves = [w.power_curve for w in grid.windfarms]
pbar1 = np.array([c.available(v) for c, v in zip(curves, data.wind.speeds[k])])
dbar = data.demand_mean[k + 1:k + T]

forecast = nominal_wind_power(seasonal, var, recent, curves, T, t1)
la = solve_la_ed(grid, np.vstack([data.demand[k], dbar]), np.vstack([pbar1, forecast]), T)
print(f"look-ahead: cost ${la.objective:,.0f}/h, thermal {la.pg[0].round(1)}")

s1 = build_first_stage(grid, data.demand[k], pbar1)
s2 = build_second_stage(grid, T)
for gw in (0.0, 0.5, 1.0):
    spec = SetSpec(gamma_w=gw)
    X = product_set(build_demand_set(dbar, 0.05 * dbar, 0.0),
                    build_wind_trajectory_set(seasonal, var, recent, spec, curves, T, t1))
    res = solve_robust_ed(s1, s2, X, restarts=1)
    print(f"\nrobust Gamma_w={gw}: cost ${res.objective:,.0f}/h, thermal {res.schedule.pg[0].round(1)}, "
          f"{res.iterations} iterations, {1e3 * res.solve_seconds:.0f} ms")
    for row in res.trace:
        print(f"  it {row['iteration']}: LB {row['lb']:,.1f}  UB {row['ub']:,.1f}  "
              f"worst-case wind total {row['xi_wind_total']:.1f} MW")
