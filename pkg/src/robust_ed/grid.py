"""Power system data, DC shift factors and line flows.

Grid files are JSON with arrays ``buses``, ``lines``, ``generators``,
``windfarms`` and ``loads`` (see README for the field list).  Units are MW,
MW per 10-minute interval for ramps, $/MWh for costs and per-unit reactance on
a 100 MVA base.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.csgraph import connected_components

from .powercurve import PowerCurvePWL, pwl_power_curve, turbine_samples

BASE_MVA = 100.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float
    flow_limit: float
    name: str = ""

    def __post_init__(self):
        if not self.reactance > 0:
            raise GridError(f"line {self.name or (self.from_bus, self.to_bus)}: reactance must be positive")
        if not self.flow_limit > 0:
            raise GridError(f"line {self.name or (self.from_bus, self.to_bus)}: flow limit must be positive")


@dataclass(frozen=True)
class ThermalGen:
    bus: int
    pmin: float
    pmax: float
    ramp_up: float
    ramp_down: float
    cost: float
    name: str = ""

    def __post_init__(self):
        if not 0 <= self.pmin <= self.pmax:
            raise GridError(f"generator {self.name}: need 0 <= pmin <= pmax")
        if self.ramp_up <= 0 or self.ramp_down <= 0:
            raise GridError(f"generator {self.name}: ramp rates must be positive")
        if self.cost < 0:
            raise GridError(f"generator {self.name}: negative cost")


@dataclass(frozen=True)
class WindFarm:
    bus: int
    pwmax: float
    power_curve: PowerCurvePWL
    ramp_up: float | None = None
    ramp_down: float | None = None
    cost: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not self.pwmax > 0:
            raise GridError(f"wind farm {self.name}: pwmax must be positive")
        if self.cost < 0:
            raise GridError(f"wind farm {self.name}: negative cost")
        # ramp limits default to the capacity, i.e. never binding
        if self.ramp_up is None:
            object.__setattr__(self, "ramp_up", float(self.pwmax))
        if self.ramp_down is None:
            object.__setattr__(self, "ramp_down", float(self.pwmax))


@dataclass(frozen=True)
class Load:
    bus: int
    mean_mw: float = 0.0
    name: str = ""


@dataclass(frozen=True)
class Grid:
    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    gens: tuple[ThermalGen, ...]
    windfarms: tuple[WindFarm, ...]
    loads: tuple[Load, ...]
    slack_bus: int
    name: str = ""
    base_mva: float = BASE_MVA
    _bus_pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        pos = {b: i for i, b in enumerate(self.buses)}
        if len(pos) != len(self.buses):
            raise GridError("duplicate bus ids")
        self._bus_pos.update(pos)
        if self.slack_bus not in pos:
            raise GridError(f"slack bus {self.slack_bus} is not a bus")
        for kind, units in (("line", self.lines), ("generator", self.gens),
                            ("wind farm", self.windfarms), ("load", self.loads)):
            for u in units:
                refs = (u.from_bus, u.to_bus) if isinstance(u, Line) else (u.bus,)
                for b in refs:
                    if b not in pos:
                        raise GridError(f"{kind} {u.name!r} references unknown bus {b}")

    # sizes -----------------------------------------------------------------
    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_gens(self) -> int:
        return len(self.gens)

    @property
    def n_wind(self) -> int:
        return len(self.windfarms)

    @property
    def n_loads(self) -> int:
        return len(self.loads)

    def bus_index(self, bus: int) -> int:
        return self._bus_pos[bus]

    # incidence matrices ------------------------------------------------------
    def _incidence(self, units) -> np.ndarray:
        E = np.zeros((self.n_buses, len(units)))
        for j, u in enumerate(units):
            E[self._bus_pos[u.bus], j] = 1.0
        return E

    @cached_property
    def Eg(self) -> np.ndarray:
        return self._incidence(self.gens)

    @cached_property
    def Ew(self) -> np.ndarray:
        return self._incidence(self.windfarms)

    @cached_property
    def Ed(self) -> np.ndarray:
        return self._incidence(self.loads)

    @cached_property
    def ptdf(self) -> np.ndarray:
        return compute_ptdf(self, self.slack_bus)

    # per-unit vectors used by the dispatch builders
    def gen_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(g, attr) for g in self.gens], dtype=float)

    def wind_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(w, attr) for w in self.windfarms], dtype=float)

    @property
    def flow_limits(self) -> np.ndarray:
        return np.array([ln.flow_limit for ln in self.lines], dtype=float)

    @property
    def load_means(self) -> np.ndarray:
        return np.array([ld.mean_mw for ld in self.loads], dtype=float)

    def with_ramp_scale(self, factor: float) -> "Grid":
        """Copy with every thermal ramp rate multiplied by ``factor``."""
        gens = tuple(dataclasses.replace(g, ramp_up=g.ramp_up * factor, ramp_down=g.ramp_down * factor)
                     for g in self.gens)
        return dataclasses.replace(self, gens=gens, _bus_pos={})


def compute_ptdf(grid: Grid, slack: int | None = None) -> np.ndarray:
    """DC power transfer distribution factors (lines x buses).

    Column ``j`` gives the line flows caused by injecting 1 MW at bus ``j`` and
    withdrawing it at the slack bus, so the slack column is zero.
    """
    slack = grid.slack_bus if slack is None else slack
    nb, nl = grid.n_buses, grid.n_lines
    if nl == 0:
        return np.zeros((0, nb))
    f = np.array([grid.bus_index(ln.from_bus) for ln in grid.lines])
    t = np.array([grid.bus_index(ln.to_bus) for ln in grid.lines])
    b = np.array([1.0 / ln.reactance for ln in grid.lines])
    rows = np.arange(nl)
    # branch-bus incidence, +1 at the from end
    Cft = sparse.csr_matrix((np.r_[np.ones(nl), -np.ones(nl)], (np.r_[rows, rows], np.r_[f, t])), shape=(nl, nb))
    ncomp, _ = connected_components(abs(Cft.T @ Cft), directed=False)
    if ncomp > 1:
        raise GridError(f"network is disconnected ({ncomp} islands)")
    Bf = sparse.diags(b) @ Cft
    Bbus = (Cft.T @ Bf).toarray()
    k = grid.bus_index(slack)
    keep = np.r_[0:k, k + 1:nb]
    try:
        lu = linalg.lu_factor(Bbus[np.ix_(keep, keep)], check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise GridError("reduced susceptance matrix is singular") from exc
    ptdf = np.zeros((nl, nb))
    # PTDF_red = Bf_red Bbus_red^-1, solved as Bbus_red^T X^T = Bf_red^T
    ptdf[:, keep] = linalg.lu_solve(lu, Bf.toarray()[:, keep].T, trans=1).T
    return ptdf


def line_flow(grid: Grid, pg, pw, d) -> np.ndarray:
    """Line flows in MW for one period (or a stack of periods along axis 0)."""
    pg, pw, d = (np.asarray(a, dtype=float) for a in (pg, pw, d))
    if pg.shape[-1] != grid.n_gens or pw.shape[-1] != grid.n_wind or d.shape[-1] != grid.n_loads:
        raise ValueError("injection vectors do not match the grid's unit counts")
    inj = pg @ grid.Eg.T + pw @ grid.Ew.T - d @ grid.Ed.T
    return inj @ grid.ptdf.T


# --------------------------------------------------------------------------- io
def _power_curve(spec: dict, pwmax: float) -> PowerCurvePWL:
    if "h0" in spec:
        return PowerCurvePWL(spec["h0"], spec["h"], pwmax)
    K = int(spec.get("pieces", 4))
    if spec.get("samples", "turbine_1500kw") == "turbine_1500kw":
        samples = turbine_samples(int(spec.get("n_turbines", 50)))
    else:
        samples = np.asarray(spec["samples"], dtype=float)
    return pwl_power_curve(samples, K, pwmax)


def grid_from_dict(data: dict) -> Grid:
    try:
        buses = tuple(int(b["id"]) if isinstance(b, dict) else int(b) for b in data["buses"])
        lines = tuple(
            Line(int(ln["from"]), int(ln["to"]), float(ln["reactance"]), float(ln["flow_limit"]),
                 str(ln.get("id", f"{ln['from']}-{ln['to']}")))
            for ln in data["lines"]
        )
        gens = []
        for i, g in enumerate(data["generators"]):
            ramp = g.get("ramp")
            gens.append(ThermalGen(
                int(g["bus"]), float(g["pmin"]), float(g["pmax"]),
                float(g.get("ramp_up", ramp)), float(g.get("ramp_down", ramp)),
                float(g["cost"]), str(g.get("id", f"G{i + 1}"))))
        winds = []
        for i, w in enumerate(data.get("windfarms", [])):
            pwmax = float(w["pwmax"])
            winds.append(WindFarm(
                int(w["bus"]), pwmax, _power_curve(w.get("power_curve", {}), pwmax),
                None if w.get("ramp_up") is None else float(w["ramp_up"]),
                None if w.get("ramp_down") is None else float(w["ramp_down"]),
                float(w.get("cost", 0.0)), str(w.get("id", f"W{i + 1}"))))
        loads = tuple(Load(int(ld["bus"]), float(ld.get("mean_mw", 0.0)), str(ld.get("id", f"L{i + 1}")))
                      for i, ld in enumerate(data["loads"]))
        slack = int(data.get("slack_bus", buses[0]))
    except KeyError as exc:
        raise GridError(f"grid data is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GridError):
            raise
        raise GridError(f"malformed grid data: {exc}") from exc
    base = float(data.get("base_mva", BASE_MVA))
    return Grid(buses, lines, tuple(gens), tuple(winds), loads, slack, str(data.get("name", "")), base)


def load_grid(path) -> Grid:
    """Read and validate a JSON grid file.

    ``path`` may also be the name of a bundled fixture, e.g. ``"14bus"``.
    """
    p = Path(path)
    if not p.exists():
        bundled = Path(__file__).parent / "data" / f"{Path(str(path)).stem}.json"
        if not bundled.exists():
            raise FileNotFoundError(path)
        p = bundled
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise GridError(f"{p}: {exc}") from exc
    return grid_from_dict(data)
