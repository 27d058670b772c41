import numpy as np
import pytest

from robust_ed.grid import grid_from_dict, load_grid

# acceptance verdict lines, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def linear_curve(pwmax=100.0, slope=10.0, cut_in=3.0):
    """One-piece curve ``pbar >= slope * (r - cut_in)``."""
    return {"h0": [-slope * cut_in], "h": [slope]}


def toy_grid_dict(n_gens=2, n_wind=1, loads=(100.0,), flow_limit=1000.0, gens=None, wind_pwmax=80.0):
    """Two-bus system: thermal units at bus 1, wind and loads at bus 2."""
    gens = gens or [
        {"bus": 1, "pmin": 10.0, "pmax": 150.0, "ramp": 20.0, "cost": 20.0},
        {"bus": 1, "pmin": 0.0, "pmax": 80.0, "ramp": 30.0, "cost": 50.0},
    ][:n_gens]
    return {
        "buses": [1, 2],
        "slack_bus": 1,
        "lines": [{"from": 1, "to": 2, "reactance": 0.1, "flow_limit": flow_limit}],
        "generators": gens,
        "windfarms": [{"bus": 2, "pwmax": wind_pwmax, "power_curve": linear_curve()} for _ in range(n_wind)],
        "loads": [{"bus": 2, "mean_mw": d} for d in loads],
    }


@pytest.fixture(scope="session")
def grid14():
    return load_grid("14bus")


@pytest.fixture(scope="session")
def toy_grid():
    return grid_from_dict(toy_grid_dict())


@pytest.fixture(scope="session")
def triangle():
    return grid_from_dict({
        "buses": [1, 2, 3],
        "slack_bus": 3,
        "lines": [{"from": 1, "to": 2, "reactance": 0.1, "flow_limit": 10},
                  {"from": 2, "to": 3, "reactance": 0.1, "flow_limit": 10},
                  {"from": 1, "to": 3, "reactance": 0.1, "flow_limit": 10}],
        "generators": [{"bus": 1, "pmin": 0, "pmax": 10, "ramp": 5, "cost": 1}],
        "windfarms": [{"bus": 2, "pwmax": 5, "power_curve": linear_curve()}],
        "loads": [{"bus": 3, "mean_mw": 1.0}],
    })


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tiny_instance(seed: int):
    """Seeded 2-gen / 1-farm / T=3 robust ED with a 16-vertex box over (d2, d3, pbar2, pbar3)."""
    from robust_ed.dispatch import build_first_stage, build_second_stage
    from robust_ed.uncertainty import box_set

    r = np.random.default_rng(seed)
    gens = [
        {"bus": 1, "pmin": 0.0, "pmax": float(r.uniform(80, 150)), "ramp": float(r.uniform(5, 25)),
         "cost": float(r.uniform(10, 30))},
        {"bus": 1, "pmin": 0.0, "pmax": float(r.uniform(40, 80)), "ramp": float(r.uniform(10, 40)),
         "cost": float(r.uniform(40, 90))},
    ]
    d1 = float(r.uniform(60, 120))
    g = grid_from_dict(toy_grid_dict(loads=(d1,), gens=gens, wind_pwmax=float(r.uniform(30, 80))))
    T = 3
    pb1 = float(r.uniform(0, 40))
    p0 = np.array([min(d1 * 0.7, gens[0]["pmax"]), min(d1 * 0.2, gens[1]["pmax"])])
    s1 = build_first_stage(g, np.array([d1]), np.array([pb1]), (p0, None))
    s2 = build_second_stage(g, T)
    d_nom = d1 + r.uniform(-15, 15, T - 1)
    w_nom = r.uniform(5, 45, T - 1)
    dev_d = r.uniform(0, 15, T - 1)
    dev_w = r.uniform(0, 25, T - 1)
    lo = np.r_[np.maximum(d_nom - dev_d, 0), np.maximum(w_nom - dev_w, 0)]
    hi = np.r_[d_nom + dev_d, w_nom + dev_w]
    xi_set = box_set(lo, hi, point=np.r_[d_nom, w_nom])
    return g, s1, s2, xi_set
