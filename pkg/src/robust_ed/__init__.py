"""Adaptive robust multi-period economic dispatch with dynamic wind uncertainty sets.

Modules, bottom-up:

- ``grid``: network fixtures, PTDF matrix and DC line flows
- ``powercurve``: convex piecewise-linear under-approximation of turbine curves
- ``windstats``: seasonal + VAR wind model, forecasts and simulation
- ``uncertainty``: polyhedral demand and wind trajectory sets (DUS, SUS1, SUS2)
- ``dispatch``: first/second stage blocks, look-ahead and reserve dispatch
- ``ccg``: constraint-and-column generation with the alternating-direction oracle
- ``sim``: rolling-horizon simulator and budget sweeps
- ``cli``: ``estimate``, ``solve``, ``simulate`` and ``sweep`` commands
"""
from .ccg import RobustResult, eval_Q_ad, exact_Q_enum, solve_robust_ed
from .dispatch import (C_MINUS, C_PLUS, CompactStage2, DispatchSchedule, MasterLP, Stage1Region,
                       build_first_stage, build_second_stage, interval_cost, solve_la_ed, solve_res_la_ed)
from .grid import Grid, compute_ptdf, grid_from_dict, line_flow, load_grid
from .powercurve import PowerCurvePWL, pwl_power_curve
from .sim import SimConfig, SimData, SimMetrics, run_rolling_horizon, sweep_gamma, synthetic_data
from .uncertainty import (Polyhedron, SetSpec, build_demand_set, build_wind_trajectory_set, product_set)
from .windstats import (SeasonalModel, VarModel, WindSeries, fit_seasonal, fit_var, nominal_forecast,
                        simulate_wind)

__version__ = "0.1.0"

__all__ = [
    "C_MINUS", "C_PLUS", "CompactStage2", "DispatchSchedule", "Grid", "MasterLP", "Polyhedron", "PowerCurvePWL",
    "RobustResult", "SeasonalModel", "SetSpec", "SimConfig", "SimData", "SimMetrics", "Stage1Region", "VarModel",
    "WindSeries", "build_demand_set", "build_first_stage", "build_second_stage", "build_wind_trajectory_set",
    "compute_ptdf", "eval_Q_ad", "exact_Q_enum", "fit_seasonal", "fit_var", "grid_from_dict", "interval_cost",
    "line_flow", "load_grid", "nominal_forecast", "product_set", "pwl_power_curve", "run_rolling_horizon",
    "simulate_wind", "solve_la_ed", "solve_res_la_ed", "solve_robust_ed", "sweep_gamma", "synthetic_data",
]
