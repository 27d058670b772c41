"""Constraint-and-column generation for the two-stage robust dispatch.

The worst-case recourse cost

    Q(x) = max_{xi in Xi} min_y { b'y : G y >= h - E x - M xi }
         = max_{xi in Xi, pi in Pi} pi'(h - E x - M xi),   Pi = {pi >= 0 : G'pi = b}

is bilinear in (pi, xi).  :func:`eval_Q_ad` alternates between the two blocks
(each step is an LP), which reaches a partial optimum but not necessarily the
global one.  :func:`exact_Q_enum` enumerates the vertices of a small set and
is used to check it.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .dispatch import CompactStage2, DispatchSchedule, MasterLP, Stage1Region, unpack_xi
from .uncertainty import Polyhedron


@dataclass
class AdResult:
    """Outcome of one alternating-direction run.

    ``value = pi' (h - E x - M xi)`` at the returned pair; ``history`` lists
    the objective after every half-step and is nondecreasing.
    """

    value: float
    xi: np.ndarray
    pi: np.ndarray
    y: np.ndarray
    alternations: int
    converged: bool
    history: list[float] = field(default_factory=list)


def eval_Q_ad(x, stage2: CompactStage2, xi_set: Polyhedron, delta: float = 1e-6, xi0=None,
              max_alternations: int = 100, restarts: int = 0, seed: int = 0) -> AdResult:
    """Alternating-direction estimate of ``Q(x)`` (a lower bound).

    ``delta`` is relative: the run stops once the xi-step gains at most
    ``delta * max(1, |C|)``.  ``restarts`` extra runs start from vertices
    picked by random linear objectives; the best run is returned.
    """
    x = np.asarray(x, float)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if xi0 is None:
        xi0 = xi_set.nominal_xi
    else:
        xi0 = np.asarray(xi0, float)
        if not xi_set.contains(xi0):
            raise ValueError("starting point is not in the uncertainty set")
    best = _ad_run(x, stage2, xi_set, delta, xi0, max_alternations)
    rng = np.random.default_rng(seed)
    # sign the random direction so the minimisation stays bounded along half-lines of the box
    lo, hi = xi_set.lb[xi_set.xi_index], xi_set.ub[xi_set.xi_index]
    up_only, down_only = np.isinf(hi) & np.isfinite(lo), np.isinf(lo) & np.isfinite(hi)
    for _ in range(restarts):
        w = rng.standard_normal(xi_set.n_xi)
        w = np.where(up_only, np.abs(w), np.where(down_only, -np.abs(w), w))
        _, z = xi_set.optimize_xi(w)
        run = _ad_run(x, stage2, xi_set, delta, xi_set.xi(z), max_alternations)
        if run.value > best.value:
            best = run
    return best


def _ad_run(x, s2: CompactStage2, xi_set: Polyhedron, delta, xi, max_alt) -> AdResult:
    v, y, pi = s2.solve_inner(x, xi)
    hist = [v]
    base_rhs = s2.h - s2.E @ x
    MT = s2.M.T.tocsr()
    for k in range(1, max_alt + 1):
        # xi-step: maximise pi'(h - Ex) - (M'pi)'xi over the set
        val, z = xi_set.optimize_xi(MT @ pi)
        c_new = float(pi @ base_rhs - val)
        hist.append(c_new)
        if c_new - v <= delta * max(1.0, abs(v)):
            return AdResult(v, xi, pi, y, k, True, hist)
        xi = xi_set.xi(z)
        # pi-step: the dual of the recourse LP at the new xi
        v, y, pi = s2.solve_inner(x, xi)
        hist.append(v)
    return AdResult(v, xi, pi, y, max_alt, False, hist)


def exact_Q_enum(x, stage2: CompactStage2, xi_set: Polyhedron, max_vertices: int = 10_000,
                 vertices=None) -> tuple[float, np.ndarray]:
    """``max`` of the recourse value over all vertices of a small set.

    Exact because the recourse value is convex in ``xi``.  Returns the value
    and a maximising vertex.
    """
    V = xi_set.vertices(max_vertices) if vertices is None else np.asarray(vertices, float)
    best, arg = -np.inf, None
    for xi in V:
        v, _, _ = stage2.solve_inner(x, xi)
        if v > best:
            best, arg = v, xi
    return float(best), arg


def deterministic_equivalent(stage1: Stage1Region, stage2: CompactStage2, xi_set: Polyhedron,
                             max_vertices: int = 10_000) -> tuple[float, np.ndarray]:
    """Master LP with every vertex of the set as a scenario: the exact robust optimum."""
    master = MasterLP(stage1, stage2, list(xi_set.vertices(max_vertices)))
    sol = master.solve()
    return float(sol.objective), master.x(sol)


@dataclass
class MasterState:
    """Bookkeeping of one constraint-and-column-generation run."""

    scenarios: list[np.ndarray] = field(default_factory=list)
    x: np.ndarray | None = None
    eta: float = np.nan
    lb: float = -np.inf
    ub: float = np.inf
    lb_history: list[float] = field(default_factory=list)
    ub_history: list[float] = field(default_factory=list)

    def is_duplicate(self, xi, tol: float = 1e-8) -> bool:
        return any(np.max(np.abs(xi - s), initial=0.0) <= tol for s in self.scenarios)


@dataclass
class RobustResult:
    x: np.ndarray
    schedule: DispatchSchedule
    ub: float
    lb: float
    iterations: int
    converged: bool
    stalled: bool
    state: MasterState
    trace: list[dict]
    alternations: int
    solve_seconds: float

    @property
    def objective(self) -> float:
        """Master objective at termination (a lower bound on the robust optimum)."""
        return self.lb

    @property
    def gap(self) -> float:
        return self.ub - self.lb


TRACE_FIELDS = ("iteration", "lb", "ub", "gap", "q_hat", "eta", "alternations", "ad_converged",
                "xi_demand_total", "xi_wind_total", "n_scenarios")


def solve_robust_ed(stage1: Stage1Region, stage2: CompactStage2, xi_set: Polyhedron, eps: float = 1e-4,
                    max_iter: int = 50, oracle: Literal["ad", "enum"] = "ad", delta: float = 1e-6,
                    max_alternations: int = 100, restarts: int = 0, seed: int = 0,
                    trace_path=None, master: MasterLP | None = None) -> RobustResult:
    """Two-stage robust dispatch by constraint-and-column generation.

    The master starts with the nominal point of ``xi_set`` as its only
    scenario.  Each iteration evaluates the worst case at the master's x,
    updates ``UB = min(c'x + max(Q_hat, eta))`` and adds the worst-case
    scenario with a fresh copy of the recourse variables.  It stops when
    ``UB - LB <= eps * max(1, |UB|)``, when the oracle returns a scenario
    already in the master, or after ``max_iter`` iterations.  The returned
    ``x`` is the one that achieved the best UB.

    ``master`` may be a master LP from an earlier solve on the same grid; it
    is reset to this problem and warm-started.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if oracle not in ("ad", "enum"):
        raise ValueError(f"unknown oracle {oracle!r}")
    t0 = time.perf_counter()
    c = stage1.cost()
    nominal = xi_set.nominal_xi
    if master is None:
        master = MasterLP(stage1, stage2, [nominal])
    else:
        if master.stage2 is not stage2:
            raise ValueError("master belongs to a different second stage")
        master.reset(stage1, nominal)
    state = MasterState(scenarios=[nominal])
    verts = xi_set.vertices() if oracle == "enum" else None
    trace: list[dict] = []
    best_x = None
    converged = stalled = False
    total_alt = 0
    it = 0
    for it in range(1, max_iter + 1):
        sol = master.solve()
        x, eta = master.x(sol), master.eta(sol)
        state.x, state.eta = x, eta
        state.lb = float(sol.objective)
        state.lb_history.append(state.lb)
        if oracle == "ad":
            r = eval_Q_ad(x, stage2, xi_set, delta, None, max_alternations, restarts, seed)
            q, xi, n_alt, ad_ok = r.value, r.xi, r.alternations, r.converged
        else:
            q, xi = exact_Q_enum(x, stage2, xi_set, vertices=verts)
            n_alt, ad_ok = 0, True
        total_alt += n_alt
        cand = float(c @ x) + max(q, eta)
        if cand < state.ub or best_x is None:
            state.ub, best_x = min(cand, state.ub), x
        state.ub_history.append(state.ub)
        d_xi, w_xi = unpack_xi(xi, stage2.T, stage2.n_loads, stage2.n_wind)
        trace.append({"iteration": it, "lb": state.lb, "ub": state.ub, "gap": state.ub - state.lb,
                      "q_hat": q, "eta": eta, "alternations": n_alt, "ad_converged": int(ad_ok),
                      "xi_demand_total": float(d_xi.sum()), "xi_wind_total": float(w_xi.sum()),
                      "n_scenarios": len(state.scenarios)})
        if state.ub - state.lb <= eps * max(1.0, abs(state.ub)):
            converged = True
            break
        if state.is_duplicate(xi):
            # the oracle cannot improve on the scenarios already present
            stalled = True
            break
        master.add_scenario(xi)
        state.scenarios.append(np.asarray(xi, float))
    elapsed = time.perf_counter() - t0
    if trace_path is not None:
        write_trace(trace, trace_path)
    g = stage1.grid
    sched = DispatchSchedule.from_vectors(best_x, None, g.n_gens, g.n_wind, state.lb)
    return RobustResult(best_x, sched, state.ub, state.lb, it, converged, stalled, state, trace, total_alt, elapsed)


def write_trace(trace: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in trace:
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
