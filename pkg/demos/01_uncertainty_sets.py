"""How wide is each uncertainty set?

Fit the wind model on two weeks of synthetic correlated wind, then ask each
set kind for the lowest total available wind it admits at every look-ahead
period.  The dynamic set conditions on the latest observations: it is tight
in the first periods, where the recent speeds are informative, and widens
further out as deviations compound through the VAR memory.  The static sets
have almost the same width at every period.

    python demos/01_uncertainty_sets.py
"""
import numpy as np

from robust_ed import SetSpec, build_wind_trajectory_set, fit_seasonal, fit_var, load_grid, synthetic_data
from robust_ed.windstats import residuals

T = 9
grid = load_grid("14bus")
data = synthetic_data(grid, days=1, train_days=14, seed=0)
hist = data.wind.window(0, data.start)
seasonal = fit_seasonal(hist)
res = residuals(hist, seasonal)
var_dus, var_static = fit_var(res, 6), fit_var(res, 0)
print(f"fitted VAR(6) on {len(hist)} rows, spectral radius {var_dus.spectral_radius():.2f}")

curves = [w.power_curve for w in grid.windfarms]
k = data.start
recent = data.wind.speeds[k - 5:k + 1]
t1 = data.wind.start + k
print("\nlowest total available wind (MW) per period, Gamma_w = 1")
print("period  " + "  ".join(f"{t:>6d}" for t in range(2, T + 1)))
for kind in ("dus", "sus1", "sus2"):
    W = build_wind_trajectory_set(seasonal, var_dus if kind == "dus" else var_static, recent,
                                  SetSpec(kind=kind, gamma_w=1.0), curves, T, t1)
    labels = W.xi_labels
    lows = []
    for t in range(2, T + 1):
        w = np.array([1.0 if lab.startswith(f"pbar[{t},") else 0.0 for lab in labels])
        lows.append(W.optimize_xi(w)[0])
    print(f"{kind:<6}  " + "  ".join(f"{v:6.1f}" for v in lows))

realised = [sum(c.available(v) for c, v in zip(curves, data.wind.speeds[k + s])) for s in range(1, T)]
print("actual  " + "  ".join(f"{v:6.1f}" for v in realised))
