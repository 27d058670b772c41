"""Dispatch models: first-stage region, compact second stage and baselines.

Decision blocks per period are ``(pg, pw, s_plus, s_minus)``: thermal output,
wind output, under-generation slack and over-generation slack.  Slack power
is settled at the loads, so it does not enter line flows.

The second stage for periods 2..T is kept in the compact form
``G y >= h - E x - M xi`` with ``xi = (d, pbar)``.  Energy balance appears
there as a pair of opposite inequalities; when an LP is assembled the pair is
merged back into one equality row and its dual is split again afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .grid import Grid
from .lp import LpError, LpModel, LpProblem, LpSolution

C_PLUS = 6000.0
C_MINUS = 600.0
INTERVALS_PER_HOUR = 6


# ------------------------------------------------------------------ stage 1
@dataclass(frozen=True)
class Stage1Region:
    """Single-period dispatch region for period 1.

    Thermal, wind and ramp limits are column bounds; line limits and energy
    balance are rows.  ``p0_g``/``p0_w`` is the dispatch implemented in the
    previous interval.
    """

    grid: Grid
    d1: np.ndarray
    pbar1: np.ndarray
    p0_g: np.ndarray | None
    p0_w: np.ndarray | None
    c_plus: float = C_PLUS
    c_minus: float = C_MINUS

    @property
    def n_x(self) -> int:
        return self.grid.n_gens + self.grid.n_wind + 2

    @property
    def col_labels(self) -> list[str]:
        g = self.grid
        return ([f"pg[1,{x.name}]" for x in g.gens] + [f"pw[1,{w.name}]" for w in g.windfarms]
                + ["s_plus[1]", "s_minus[1]"])

    def cost(self) -> np.ndarray:
        g = self.grid
        return np.r_[g.gen_array("cost"), g.wind_array("cost"), self.c_plus, self.c_minus]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        lo_g, hi_g = g.gen_array("pmin"), g.gen_array("pmax")
        if self.p0_g is not None:
            lo_g = np.maximum(lo_g, self.p0_g - g.gen_array("ramp_down"))
            hi_g = np.minimum(hi_g, self.p0_g + g.gen_array("ramp_up"))
        hi_w = np.minimum(g.wind_array("pwmax"), self.pbar1)
        lo_w = np.zeros(g.n_wind)
        if self.p0_w is not None:
            hi_w = np.minimum(hi_w, self.p0_w + g.wind_array("ramp_up"))
            lo_w = np.maximum(lo_w, self.p0_w - g.wind_array("ramp_down"))
        # a binding wind ramp-down cannot force output above what is available
        lo_w = np.minimum(lo_w, hi_w)
        if np.any(lo_g > hi_g + 1e-9):
            raise ValueError("previous thermal dispatch lies outside the generator limits")
        hi_g = np.maximum(hi_g, lo_g)
        return np.r_[lo_g, lo_w, 0.0, 0.0], np.r_[hi_g, hi_w, np.inf, np.inf]

    def rows(self):
        """``(A, senses, rhs, labels)`` for line limits and balance."""
        g = self.grid
        aG = g.ptdf @ g.Eg
        aW = g.ptdf @ g.Ew
        base = g.ptdf @ g.Ed @ self.d1
        f = g.flow_limits
        inj = np.hstack([aG, aW, np.zeros((g.n_lines, 2))])
        bal = np.r_[np.ones(g.n_gens + g.n_wind), 1.0, -1.0][None]
        A = np.vstack([inj, inj, bal])
        senses = np.concatenate([np.full(g.n_lines, "<"), np.full(g.n_lines, ">"), ["="]])
        rhs = np.r_[f + base, -f + base, self.d1.sum()]
        labels = ([f"flow_max[1,{ln.name}]" for ln in g.lines] + [f"flow_min[1,{ln.name}]" for ln in g.lines]
                  + ["balance[1]"])
        return sparse.csr_matrix(A), senses, rhs, labels

    def problem(self) -> LpProblem:
        A, senses, rhs, labels = self.rows()
        lb, ub = self.bounds()
        return LpProblem(self.cost(), A, senses, rhs, lb, ub, col_names=self.col_labels, row_names=labels)


def build_first_stage(grid: Grid, obs_d1, obs_wind1, prev_dispatch=None,
                      c_plus: float = C_PLUS, c_minus: float = C_MINUS) -> Stage1Region:
    """Period-1 region from observed demand and available wind.

    ``prev_dispatch`` is ``(pg0, pw0)``, a flat vector of both, or None to
    drop the ramp coupling.
    """
    d1 = np.asarray(obs_d1, dtype=float).ravel()
    pbar1 = np.asarray(obs_wind1, dtype=float).ravel()
    if d1.size != grid.n_loads or pbar1.size != grid.n_wind:
        raise ValueError("observations do not match the grid's load/wind counts")
    if np.any(d1 < 0) or np.any(pbar1 < 0):
        raise ValueError("observations must be nonnegative")
    p0_g = p0_w = None
    if prev_dispatch is not None:
        if isinstance(prev_dispatch, tuple):
            p0_g, p0_w = prev_dispatch
        else:
            flat = np.asarray(prev_dispatch, dtype=float).ravel()
            p0_g, p0_w = flat[:grid.n_gens], flat[grid.n_gens:grid.n_gens + grid.n_wind]
        p0_g = np.asarray(p0_g, dtype=float).ravel()
        p0_w = None if p0_w is None else np.asarray(p0_w, dtype=float).ravel()
        if p0_g.size != grid.n_gens or (p0_w is not None and p0_w.size != grid.n_wind):
            raise ValueError("previous dispatch does not match the unit counts")
    return Stage1Region(grid, d1, pbar1, p0_g, p0_w, c_plus, c_minus)


# ------------------------------------------------------------------ stage 2
@dataclass
class CompactStage2:
    """``min b'y  s.t.  G y >= h - E x - M xi`` for periods 2..T (y free).

    ``eq_pairs`` lists ``(i, j)`` where row ``j`` is the negation of row ``i``
    (the two halves of an energy-balance equality).
    """

    G: sparse.csr_matrix
    h: np.ndarray
    E: sparse.csr_matrix
    M: sparse.csr_matrix
    b: np.ndarray
    T: int
    n_gens: int
    n_wind: int
    n_loads: int
    row_labels: list[str]
    col_labels: list[str]
    eq_pairs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_y(self) -> int:
        return self.G.shape[1]

    @property
    def n_rows(self) -> int:
        return self.G.shape[0]

    @property
    def n_xi(self) -> int:
        return self.M.shape[1]

    @property
    def block(self) -> int:
        return self.n_gens + self.n_wind + 2

    def rhs(self, x, xi) -> np.ndarray:
        return self.h - self.E @ np.asarray(x, float) - self.M @ np.asarray(xi, float)

    # merged (equality) form used for every LP solve
    def _merged(self):
        if "merged" not in self._cache:
            drop = np.zeros(self.n_rows, bool)
            drop[self.eq_pairs[:, 1]] = True
            keep = np.flatnonzero(~drop)
            senses = np.full(self.n_rows, ">")
            senses[self.eq_pairs[:, 0]] = "="
            self._cache["merged"] = (keep, senses[keep])
        return self._cache["merged"]

    def lp_rows(self, rhs):
        """Rows in merged form: ``(G_kept, senses, rhs_kept)``."""
        keep, senses = self._merged()
        return self.G[keep], senses, rhs[keep]

    def split_duals(self, duals) -> np.ndarray:
        """Map merged-form duals to the paired-inequality multipliers ``pi >= 0``."""
        keep, senses = self._merged()
        pi = np.zeros(self.n_rows)
        pi[keep] = duals
        eq_i, eq_j = self.eq_pairs[:, 0], self.eq_pairs[:, 1]
        lam = pi[eq_i].copy()
        pi[eq_i] = np.maximum(lam, 0.0)
        pi[eq_j] = np.maximum(-lam, 0.0)
        # ">" duals of a min problem are >= 0 up to solver noise
        return np.maximum(pi, 0.0)

    def _inner(self) -> LpModel:
        if "inner" not in self._cache:
            G, senses, rhs = self.lp_rows(self.h)
            self._cache["inner"] = LpModel(LpProblem(self.b, G, senses, rhs))
        return self._cache["inner"]

    def solve_inner(self, x, xi) -> tuple[float, np.ndarray, np.ndarray]:
        """Recourse value, recourse ``y`` and dual ``pi`` at ``(x, xi)``.

        The LP model is persistent and warm-started; only the right-hand side
        changes between calls.
        """
        rhs = self.rhs(x, xi)
        _, senses, r = self.lp_rows(rhs)
        m = self._inner()
        m.set_rhs(senses, r)
        sol = m.solve()
        if not sol.optimal:
            raise RecourseError(f"second-stage LP is {sol.status}; recourse is not complete")
        return float(sol.objective), sol.x, self.split_duals(sol.duals)

    def dual_feasibility(self, pi) -> float:
        """``max |pi'G - b|`` plus any negative part of ``pi``."""
        return float(max(np.max(np.abs(self.G.T @ pi - self.b), initial=0.0), max(0.0, -np.min(pi, initial=0.0))))

    def unpack(self, y) -> dict:
        """Split a recourse vector into per-period arrays for periods 2..T."""
        Y = np.asarray(y, float).reshape(self.T - 1, self.block)
        ng, nw = self.n_gens, self.n_wind
        return {"pg": Y[:, :ng], "pw": Y[:, ng:ng + nw], "s_plus": Y[:, ng + nw], "s_minus": Y[:, ng + nw + 1]}


class RecourseError(LpError):
    pass


def pack_xi(d, pbar) -> np.ndarray:
    """Uncertain vector from (periods 2..T x loads) demand and (x farms) wind."""
    return np.r_[np.asarray(d, float).ravel(), np.asarray(pbar, float).ravel()]


def unpack_xi(xi, T: int, n_loads: int, n_wind: int):
    xi = np.asarray(xi, float)
    k = (T - 1) * n_loads
    return xi[:k].reshape(T - 1, n_loads), xi[k:].reshape(T - 1, n_wind)


def build_second_stage(grid: Grid, T: int, c_plus: float = C_PLUS, c_minus: float = C_MINUS) -> CompactStage2:
    if T < 2:
        raise ValueError("the second stage needs T >= 2")
    ng, nw, nd = grid.n_gens, grid.n_wind, grid.n_loads
    nb = ng + nw + 2
    nx = nb
    n_y = (T - 1) * nb
    n_xi = (T - 1) * (nd + nw)
    pmin, pmax = grid.gen_array("pmin"), grid.gen_array("pmax")
    ru, rd = grid.gen_array("ramp_up"), grid.gen_array("ramp_down")
    pwmax = grid.wind_array("pwmax")
    rwu, rwd = grid.wind_array("ramp_up"), grid.wind_array("ramp_down")
    aG, aW, aD = grid.ptdf @ grid.Eg, grid.ptdf @ grid.Ew, grid.ptdf @ grid.Ed
    f = grid.flow_limits

    Gr, Gc, Gv = [], [], []
    Er, Ec, Ev = [], [], []
    Mr, Mc, Mv = [], [], []
    h: list[float] = []
    labels: list[str] = []
    pairs = []

    def row(label, rhs, g=(), e=(), m=()):
        i = len(h)
        for j, v in g:
            Gr.append(i), Gc.append(j), Gv.append(v)
        for j, v in e:
            Er.append(i), Ec.append(j), Ev.append(v)
        for j, v in m:
            Mr.append(i), Mc.append(j), Mv.append(v)
        h.append(float(rhs))
        labels.append(label)
        return i

    for k in range(T - 1):
        t = k + 2
        o = k * nb
        pg = o + np.arange(ng)
        pw = o + ng + np.arange(nw)
        sp, sm = o + ng + nw, o + ng + nw + 1
        d_cols = k * nd + np.arange(nd)
        pb_cols = (T - 1) * nd + k * nw + np.arange(nw)
        for i, gen in enumerate(grid.gens):
            row(f"pg_min[{t},{gen.name}]", pmin[i], g=[(pg[i], 1.0)])
            row(f"pg_max[{t},{gen.name}]", -pmax[i], g=[(pg[i], -1.0)])
        for i, w in enumerate(grid.windfarms):
            row(f"pw_min[{t},{w.name}]", 0.0, g=[(pw[i], 1.0)])
            row(f"pw_max[{t},{w.name}]", -pwmax[i], g=[(pw[i], -1.0)])
            row(f"pw_avail[{t},{w.name}]", 0.0, g=[(pw[i], -1.0)], m=[(pb_cols[i], 1.0)])
        # ramps: previous period is x for t = 2, else the earlier y block
        for i, gen in enumerate(grid.gens):
            if k == 0:
                row(f"ramp_up[{t},{gen.name}]", -ru[i], g=[(pg[i], -1.0)], e=[(i, 1.0)])
                row(f"ramp_down[{t},{gen.name}]", -rd[i], g=[(pg[i], 1.0)], e=[(i, -1.0)])
            else:
                prev = pg[i] - nb
                row(f"ramp_up[{t},{gen.name}]", -ru[i], g=[(pg[i], -1.0), (prev, 1.0)])
                row(f"ramp_down[{t},{gen.name}]", -rd[i], g=[(pg[i], 1.0), (prev, -1.0)])
        for i, w in enumerate(grid.windfarms):
            if k == 0:
                row(f"wramp_up[{t},{w.name}]", -rwu[i], g=[(pw[i], -1.0)], e=[(ng + i, 1.0)])
                row(f"wramp_down[{t},{w.name}]", -rwd[i], g=[(pw[i], 1.0)], e=[(ng + i, -1.0)])
            else:
                prev = pw[i] - nb
                row(f"wramp_up[{t},{w.name}]", -rwu[i], g=[(pw[i], -1.0), (prev, 1.0)])
                row(f"wramp_down[{t},{w.name}]", -rwd[i], g=[(pw[i], 1.0), (prev, -1.0)])
        for l, ln in enumerate(grid.lines):
            gl = [(pg[i], aG[l, i]) for i in range(ng)] + [(pw[i], aW[l, i]) for i in range(nw)]
            dl = [(d_cols[j], aD[l, j]) for j in range(nd)]
            row(f"flow_max[{t},{ln.name}]", -f[l], g=[(j, -v) for j, v in gl], m=dl)
            row(f"flow_min[{t},{ln.name}]", -f[l], g=gl, m=[(j, -v) for j, v in dl])
        gb = [(j, 1.0) for j in np.r_[pg, pw]] + [(sp, 1.0), (sm, -1.0)]
        i = row(f"balance_ge[{t}]", 0.0, g=gb, m=[(j, -1.0) for j in d_cols])
        j = row(f"balance_le[{t}]", 0.0, g=[(c, -v) for c, v in gb], m=[(c, 1.0) for c in d_cols])
        pairs.append((i, j))
        row(f"s_plus_min[{t}]", 0.0, g=[(sp, 1.0)])
        row(f"s_minus_min[{t}]", 0.0, g=[(sm, 1.0)])

    m = len(h)
    G = sparse.csr_matrix((Gv, (Gr, Gc)), shape=(m, n_y))
    E = sparse.csr_matrix((Ev, (Er, Ec)), shape=(m, nx))
    M = sparse.csr_matrix((Mv, (Mr, Mc)), shape=(m, n_xi))
    b = np.tile(np.r_[grid.gen_array("cost"), grid.wind_array("cost"), c_plus, c_minus], T - 1)
    cols = []
    for t in range(2, T + 1):
        cols += ([f"pg[{t},{x.name}]" for x in grid.gens] + [f"pw[{t},{w.name}]" for w in grid.windfarms]
                 + [f"s_plus[{t}]", f"s_minus[{t}]"])
    return CompactStage2(G, np.array(h), E, M, b, T, ng, nw, nd, labels, cols, np.array(pairs, dtype=int))


# ------------------------------------------------------------ master / LA-ED
class MasterLP:
    """``min c'x + eta`` over ``x in Omega_1`` with one recourse block per scenario.

    Scenario ``l`` adds ``eta >= b'y_l`` and ``G y_l + E x >= h - M xi_l``.
    The same object serves as the look-ahead ED (one nominal scenario) and
    as the constraint-and-column-generation master, so the two coincide
    exactly when the uncertainty set is a single point.
    """

    def __init__(self, stage1: Stage1Region, stage2: CompactStage2 | None, scenarios=()):
        self.stage1 = stage1
        self.stage2 = stage2
        p1 = stage1.problem()
        self.n_x = stage1.n_x
        self.scenarios: list[np.ndarray] = []
        lb, ub = p1.lb, p1.ub
        # eta is pinned to zero when there is no second stage
        eta_ub = np.inf if stage2 is not None else 0.0
        eta_lb = -np.inf if stage2 is not None else 0.0
        c = np.r_[p1.c, 1.0]
        A = sparse.hstack([p1.A, sparse.csr_matrix((p1.A.shape[0], 1))], format="csr")
        senses, rhs = list(p1.senses), list(p1.rhs)
        blocks = [A]
        lbs, ubs, costs = [np.r_[lb, eta_lb]], [np.r_[ub, eta_ub]], [c]
        n_cols = self.n_x + 1
        for xi in scenarios:
            Ab, sb, rb = self._scenario_rows(xi, n_cols)
            blocks = [sparse.hstack([B, sparse.csr_matrix((B.shape[0], self.stage2.n_y))], format="csr")
                      for B in blocks]
            blocks.append(Ab)
            senses += list(sb)
            rhs += list(rb)
            lbs.append(np.full(self.stage2.n_y, -np.inf))
            ubs.append(np.full(self.stage2.n_y, np.inf))
            costs.append(np.zeros(self.stage2.n_y))
            n_cols += self.stage2.n_y
            self.scenarios.append(np.asarray(xi, float))
        self.n_stage1_rows = p1.A.shape[0]
        self.n_base_rows = self.n_stage1_rows + (1 + len(self.stage2._merged()[0]) if stage2 is not None else 0)
        A = sparse.vstack(blocks, format="csr")
        self.problem = LpProblem(np.concatenate(costs), A, np.array(senses), np.array(rhs),
                                 np.concatenate(lbs), np.concatenate(ubs))
        self.model = LpModel(self.problem)
        self.n_cols = n_cols
        self.last: LpSolution | None = None

    def _scenario_rows(self, xi, n_cols_before):
        """Rows of one scenario block over ``[x, eta, earlier y..., y_l]``."""
        s2 = self.stage2
        G, senses, rhs = s2.lp_rows(s2.h - s2.M @ np.asarray(xi, float))
        keep, _ = s2._merged()
        E = s2.E[keep]
        pad = n_cols_before - self.n_x - 1
        eta_row = sparse.hstack([sparse.csr_matrix((1, self.n_x)), sparse.csr_matrix(([1.0], ([0], [0])), shape=(1, 1)),
                                 sparse.csr_matrix((1, pad)), sparse.csr_matrix(-s2.b[None])], format="csr")
        body = sparse.hstack([E, sparse.csr_matrix((E.shape[0], 1)), sparse.csr_matrix((E.shape[0], pad)), G],
                             format="csr")
        return (sparse.vstack([eta_row, body], format="csr"), np.concatenate([[">"], senses]), np.r_[0.0, rhs])

    def reset(self, stage1: Stage1Region, xi=None) -> "MasterLP":
        """Reuse the solver for a new interval with ``xi`` as the only scenario.

        Scenario blocks added since construction are deleted and only bounds
        and right-hand sides are updated, so the next solve warm-starts.  The
        grid, horizon and penalties must be those the master was built for.
        """
        if stage1.grid is not self.stage1.grid or stage1.n_x != self.n_x:
            raise ValueError("master was built for a different grid")
        if (stage1.c_plus, stage1.c_minus) != (self.stage1.c_plus, self.stage1.c_minus):
            raise ValueError("master was built with different penalties")
        m = self.model
        if self.stage2 is not None and (xi is None or len(self.scenarios) == 0):
            raise ValueError("a nominal scenario is required")
        if len(self.scenarios) > 1:
            n_keep = self.n_x + 1 + self.stage2.n_y
            m.delete_cols(np.arange(n_keep, self.n_cols))
            m.delete_rows(np.arange(self.n_base_rows, m.n_rows))
            self.n_cols = n_keep
            del self.scenarios[1:]
        lb, ub = stage1.bounds()
        m.set_col_bounds(lb, ub, np.arange(self.n_x))
        _, senses, rhs, _ = stage1.rows()
        m.set_rhs(senses, rhs, np.arange(self.n_stage1_rows))
        if self.stage2 is not None:
            s2 = self.stage2
            _, s_senses, s_rhs = s2.lp_rows(s2.h - s2.M @ np.asarray(xi, float))
            m.set_rhs(s_senses, s_rhs, self.n_stage1_rows + 1 + np.arange(len(s_rhs)))
            self.scenarios[0] = np.asarray(xi, float)
        self.stage1 = stage1
        self.last = None
        return self

    def add_scenario(self, xi) -> None:
        if self.stage2 is None:
            raise ValueError("no second stage to add scenarios to")
        n_y = self.stage2.n_y
        Ab, sb, rb = self._scenario_rows(xi, self.n_cols)
        # new columns first (zero in existing rows), then the new rows
        self.model.add_cols(np.zeros(n_y), np.full(n_y, -np.inf), np.full(n_y, np.inf),
                            sparse.csr_matrix((self.model.n_rows, n_y)))
        self.n_cols += n_y
        self.model.add_rows(sb, rb, Ab)
        self.scenarios.append(np.asarray(xi, float))

    def solve(self) -> LpSolution:
        sol = self.model.solve()
        if not sol.optimal:
            raise LpError(f"master LP is {sol.status}")
        self.last = sol
        return sol

    def x(self, sol=None) -> np.ndarray:
        sol = sol or self.last
        return sol.x[:self.n_x]

    def eta(self, sol=None) -> float:
        sol = sol or self.last
        return float(sol.x[self.n_x])

    def y(self, l: int, sol=None) -> np.ndarray:
        sol = sol or self.last
        o = self.n_x + 1 + l * self.stage2.n_y
        return sol.x[o:o + self.stage2.n_y]

    def first_stage_cost(self, sol=None) -> float:
        return float(self.stage1.cost() @ self.x(sol))


@dataclass
class DispatchSchedule:
    """Per-period dispatch; row 0 is period 1."""

    pg: np.ndarray
    pw: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    objective: float
    reserve: np.ndarray | None = None
    reserve_shortfall: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.pg.shape[0]

    @property
    def x(self) -> np.ndarray:
        """First-stage vector ``(pg1, pw1, s_plus1, s_minus1)``."""
        return np.r_[self.pg[0], self.pw[0], self.s_plus[0], self.s_minus[0]]

    def balance_residual(self, demand) -> np.ndarray:
        d = np.atleast_2d(np.asarray(demand, float)).sum(axis=1)[:self.T]
        return self.pg.sum(1) + self.pw.sum(1) + self.s_plus - self.s_minus - d

    @classmethod
    def from_vectors(cls, x, y, n_gens, n_wind, objective) -> "DispatchSchedule":
        blocks = [np.asarray(x, float)]
        if y is not None and np.size(y):
            blocks += list(np.asarray(y, float).reshape(-1, n_gens + n_wind + 2))
        Y = np.vstack(blocks)
        return cls(Y[:, :n_gens], Y[:, n_gens:n_gens + n_wind], Y[:, n_gens + n_wind],
                   Y[:, n_gens + n_wind + 1], float(objective))


def _forecasts(grid, forecast_d, forecast_pbar, T):
    d = np.atleast_2d(np.asarray(forecast_d, float))
    pb = np.atleast_2d(np.asarray(forecast_pbar, float))
    if d.shape != (T, grid.n_loads) or pb.shape != (T, grid.n_wind):
        raise ValueError(f"forecasts must be ({T}, loads) and ({T}, farms) arrays covering periods 1..T")
    return d, pb


def solve_la_ed(grid: Grid, forecast_d, forecast_pbar, T: int, prev_dispatch=None,
                c_plus: float = C_PLUS, c_minus: float = C_MINUS,
                stage2: CompactStage2 | None = None) -> DispatchSchedule:
    """Deterministic look-ahead ED over periods 1..T (row 0 = observed period).

    ``stage2`` may be passed to reuse a prebuilt second stage of the same
    grid, horizon and penalties.
    """
    d, pb = _forecasts(grid, forecast_d, forecast_pbar, T)
    s1 = build_first_stage(grid, d[0], pb[0], prev_dispatch, c_plus, c_minus)
    if T == 1:
        master = MasterLP(s1, None)
        sol = master.solve()
        return DispatchSchedule.from_vectors(master.x(sol), None, grid.n_gens, grid.n_wind, sol.objective)
    s2 = build_second_stage(grid, T, c_plus, c_minus) if stage2 is None else stage2
    if s2.T != T:
        raise ValueError("prebuilt second stage has a different horizon")
    master = MasterLP(s1, s2, [pack_xi(d[1:], pb[1:])])
    sol = master.solve()
    return DispatchSchedule.from_vectors(master.x(sol), master.y(0, sol), grid.n_gens, grid.n_wind, sol.objective)


def reserve_requirement(forecast_d, forecast_pbar, res_factor: float) -> np.ndarray:
    """``res_factor`` times forecast net load per period, floored at zero."""
    net = np.atleast_2d(forecast_d).sum(axis=1) - np.atleast_2d(forecast_pbar).sum(axis=1)
    return res_factor * np.maximum(0.0, net)


def solve_res_la_ed(grid: Grid, forecast_d, forecast_pbar, T: int, res_factor: float, prev_dispatch=None,
                    reserve_caps=None, c_plus: float = C_PLUS, c_minus: float = C_MINUS,
                    stage2: CompactStage2 | None = None) -> DispatchSchedule:
    """Look-ahead ED with a spinning-reserve requirement in every period.

    Reserve ``R`` per generator and period lies in ``[0, cap]`` (default: the
    ramp-up rate) and must fit under ``pmax`` together with ``pg``.  A
    shortfall variable priced at ``c_plus`` keeps the LP feasible when the
    requirement exceeds the available headroom.
    """
    if res_factor < 0:
        raise ValueError("res_factor must be nonnegative")
    d, pb = _forecasts(grid, forecast_d, forecast_pbar, T)
    ng, nw = grid.n_gens, grid.n_wind
    caps = grid.gen_array("ramp_up") if reserve_caps is None else np.broadcast_to(np.asarray(reserve_caps, float), (ng,))
    req = reserve_requirement(d, pb, res_factor)
    s1 = build_first_stage(grid, d[0], pb[0], prev_dispatch, c_plus, c_minus)
    s2 = None
    if T > 1:
        s2 = build_second_stage(grid, T, c_plus, c_minus) if stage2 is None else stage2
        if s2.T != T:
            raise ValueError("prebuilt second stage has a different horizon")
    master = MasterLP(s1, s2, [pack_xi(d[1:], pb[1:])] if T > 1 else [])
    nb = ng + nw + 2
    m = master.model
    n_old = master.n_cols
    # columns: R[t, g] then shortfall[t]
    n_new = T * ng + T
    m.add_cols(np.r_[np.zeros(T * ng), np.full(T, c_plus)], np.zeros(n_new),
               np.r_[np.tile(caps, T), np.full(T, np.inf)], sparse.csr_matrix((m.n_rows, n_new)))
    rows, cols, vals, senses, rhs = [], [], [], [], []
    pmax = grid.gen_array("pmax")
    r = 0
    for t in range(T):
        pg_cols = np.arange(ng) if t == 0 else master.n_x + 1 + (t - 1) * nb + np.arange(ng)
        R_cols = n_old + t * ng + np.arange(ng)
        for i in range(ng):
            rows += [r, r]
            cols += [pg_cols[i], R_cols[i]]
            vals += [1.0, 1.0]
            senses.append("<")
            rhs.append(pmax[i])
            r += 1
        rows += [r] * (ng + 1)
        cols += list(R_cols) + [n_old + T * ng + t]
        vals += [1.0] * (ng + 1)
        senses.append(">")
        rhs.append(req[t])
        r += 1
    m.add_rows(np.array(senses), np.array(rhs),
               sparse.csr_matrix((vals, (rows, cols)), shape=(r, n_old + n_new)))
    sol = m.solve()
    if not sol.optimal:
        raise LpError(f"reserve look-ahead LP is {sol.status}")
    y = master.y(0, sol) if T > 1 else None
    sched = DispatchSchedule.from_vectors(sol.x[:master.n_x], y, ng, nw, sol.objective)
    sched.reserve = sol.x[n_old:n_old + T * ng].reshape(T, ng)
    sched.reserve_shortfall = sol.x[n_old + T * ng:n_old + n_new]
    return sched


# -------------------------------------------------------------------- costs
def interval_cost(grid: Grid, pg, pw, s_plus, s_minus, c_plus: float = C_PLUS,
                  c_minus: float = C_MINUS) -> tuple[float, float]:
    """Dollar cost of one implemented 10-minute interval and its penalty part."""
    # price per MW-interval first, so s_minus = 0 gives exactly (C+/6) * s_plus
    penalty = (c_plus / INTERVALS_PER_HOUR) * float(s_plus) + (c_minus / INTERVALS_PER_HOUR) * float(s_minus)
    energy = (grid.gen_array("cost") @ np.asarray(pg, float) + grid.wind_array("cost") @ np.asarray(pw, float))
    return float(energy / INTERVALS_PER_HOUR + penalty), float(penalty)
