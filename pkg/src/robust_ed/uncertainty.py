"""Polyhedral uncertainty sets over demand and available wind power.

Every set is a :class:`Polyhedron` in a lifted variable space (auxiliary
speeds, residuals, split deviations ...) together with the column indices of
the uncertain vector ``xi = (d, pbar)`` that the dispatch model sees.  Demand
comes first, then available wind, each ordered period-major (t = 2..T).
"""
from __future__ import annotations

import itertools
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, sqrt
from typing import Literal, Sequence

import numpy as np
from scipy import sparse

from .lp import LpModel, LpProblem
from .powercurve import PowerCurvePWL
from .windstats import SeasonalModel, VarModel

Kind = Literal["dus", "sus1", "sus2"]


class EmptySetError(ValueError):
    pass


@dataclass(frozen=True)
class SetSpec:
    """How to build the wind (and demand) uncertainty set.

    ``gamma_t=None`` disables the time budget.  ``lags`` is the VAR order used
    for ``dus``; the static kinds always use zero lags.
    """

    kind: Kind = "dus"
    gamma_w: float = 0.0
    gamma_d: float = 0.0
    gamma_t: float | None = None
    lags: int = 6
    pieces: int = 4

    def __post_init__(self):
        if self.kind not in ("dus", "sus1", "sus2"):
            raise ValueError(f"unknown uncertainty-set kind {self.kind!r}")
        if self.gamma_w < 0 or self.gamma_d < 0 or (self.gamma_t is not None and self.gamma_t < 0):
            raise ValueError("budgets must be nonnegative")
        if self.lags < 0:
            raise ValueError("lags must be nonnegative")

    @property
    def effective_lags(self) -> int:
        return self.lags if self.kind == "dus" else 0


@dataclass(frozen=True)
class Polyhedron:
    """``{z : W z (<,>,=) rhs, lb <= z <= ub}`` with ``xi = z[xi_index]``.

    ``point`` is a known member (the nominal realisation).  ``box`` is set
    when the projection onto ``xi`` is a plain box, which makes vertex listing
    direct.
    """

    labels: tuple[str, ...]
    W: sparse.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    xi_index: np.ndarray
    point: np.ndarray | None = None
    box: tuple[np.ndarray, np.ndarray] | None = None
    _lp: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("duplicate variable labels")
        W = sparse.csr_matrix(self.W, shape=(self.W.shape[0], n))
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "senses", np.asarray(self.senses, dtype="<U1"))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float))
        object.__setattr__(self, "lb", np.asarray(self.lb, dtype=float))
        object.__setattr__(self, "ub", np.asarray(self.ub, dtype=float))
        object.__setattr__(self, "xi_index", np.asarray(self.xi_index, dtype=int))

    # basic shape ---------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.labels)

    @property
    def n_xi(self) -> int:
        return self.xi_index.size

    @property
    def xi_labels(self) -> list[str]:
        return [self.labels[j] for j in self.xi_index]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def xi(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float)[self.xi_index]

    @property
    def nominal_xi(self) -> np.ndarray:
        if self.point is None:
            raise ValueError("polyhedron has no nominal point")
        return self.xi(self.point)

    # LP helpers ----------------------------------------------------------
    def lp(self, c=None) -> LpProblem:
        c = np.zeros(self.n_vars) if c is None else c
        return LpProblem(c, self.W, self.senses, self.rhs, self.lb, self.ub, col_names=list(self.labels))

    def _model(self) -> LpModel:
        box = self._lp.get("box")
        if box is None:
            box = {"model": LpModel(self.lp()), "owner": self}
            self._lp["box"] = box
        elif box["owner"] is not self:
            _sync(box["model"], box["owner"], self)
            box["owner"] = self
        return box["model"]

    def share_solver(self, other: "Polyhedron") -> bool:
        """Reuse ``other``'s warm LP solver if both sets have the same sparsity.

        Only changed right-hand sides, bounds and coefficients are pushed to
        the solver, so a sequence of similar sets (one per dispatch interval)
        keeps warm-starting from the previous basis.
        """
        box = other._lp.get("box")
        if box is None or not _same_structure(self, other):
            return False
        self._lp["box"] = box
        return True

    def optimize_xi(self, weights, maximize: bool = False):
        """Optimise ``weights . xi`` over the set.

        Returns ``(value, z)``; the model is kept warm between calls since only
        the objective changes.
        """
        c = np.zeros(self.n_vars)
        c[self.xi_index] = -np.asarray(weights, float) if maximize else np.asarray(weights, float)
        m = self._model()
        m.set_objective(c)
        sol = m.solve()
        if sol.status == "infeasible":
            raise EmptySetError("uncertainty set is empty")
        if not sol.optimal:
            raise ValueError(f"linear objective over the set is {sol.status}")
        val = float(c @ sol.x)
        return (-val if maximize else val), sol.x

    def is_empty(self) -> bool:
        m = self._model()
        m.set_objective(np.zeros(self.n_vars))
        return m.solve().status == "infeasible"

    def check_nonempty(self, tol: float = 1e-9) -> "Polyhedron":
        """Raise unless the set has a member; the nominal point is tried first."""
        if self.point is not None and self.residual(self.point) <= tol * (1.0 + np.max(np.abs(self.rhs), initial=0.0)):
            return self
        if self.is_empty():
            raise EmptySetError("uncertainty set is empty")
        return self

    def residual(self, z) -> float:
        """Largest constraint violation of ``z`` (0 when feasible)."""
        z = np.asarray(z, float)
        act = self.W @ z
        viol = np.zeros(act.size)
        viol = np.where(self.senses == "<", act - self.rhs, viol)
        viol = np.where(self.senses == ">", self.rhs - act, viol)
        viol = np.where(self.senses == "=", np.abs(act - self.rhs), viol)
        bnd = np.maximum(self.lb - z, z - self.ub)
        return float(max(np.max(viol, initial=0.0), np.max(bnd, initial=0.0), 0.0))

    def contains(self, xi, tol: float = 1e-8) -> bool:
        """Whether ``xi`` is the projection of some member of the set."""
        xi = np.asarray(xi, dtype=float)
        lb, ub = self.lb.copy(), self.ub.copy()
        lb[self.xi_index] = np.maximum(lb[self.xi_index], xi - tol)
        ub[self.xi_index] = np.minimum(ub[self.xi_index], xi + tol)
        if np.any(lb > ub):
            return False
        sol = LpModel(LpProblem(np.zeros(self.n_vars), self.W, self.senses, self.rhs, lb, ub)).solve()
        return sol.optimal

    # vertices -------------------------------------------------------------
    def vertices(self, max_vertices: int = 10_000, lifted: bool = False, tol: float = 1e-9) -> np.ndarray:
        """Vertices of the set.

        Boxes are listed directly.  Otherwise every basis of the lifted system
        is tried, which is only sensible for a handful of variables; with
        ``lifted=False`` the lifted vertices are projected onto ``xi`` and
        deduplicated (the projection's vertices are among them).
        """
        if self.box is not None and not lifted:
            lo, hi = self.box
            free = np.flatnonzero(hi > lo)
            count = 2 ** free.size
            if count > max_vertices:
                raise ValueError(f"box has {count} vertices, budget is {max_vertices}")
            out = np.tile(lo, (count, 1))
            for k, bits in enumerate(itertools.product((0, 1), repeat=free.size)):
                out[k, free] = np.where(np.array(bits, bool), hi[free], lo[free])
            return out
        V = self._enumerate(max_vertices, tol)
        if lifted:
            return V
        return _extreme_rows(_unique_rows(V[:, self.xi_index], 1e-7))

    def _enumerate(self, max_vertices, tol):
        n = self.n_vars
        A = self.W.toarray()
        eq = self.senses == "="
        rows = [A[~eq]]
        rhs = [self.rhs[~eq]]
        # bounds as candidate active rows
        for j in range(n):
            for b in (self.lb[j], self.ub[j]):
                if np.isfinite(b):
                    e = np.zeros(n)
                    e[j] = 1.0
                    rows.append(e[None])
                    rhs.append(np.array([b]))
        Ain = np.vstack(rows) if rows else np.zeros((0, n))
        bin_ = np.concatenate(rhs) if rhs else np.zeros(0)
        Aeq, beq = A[eq], self.rhs[eq]
        r_eq = np.linalg.matrix_rank(Aeq) if Aeq.size else 0
        k = n - r_eq
        if comb(Ain.shape[0], k) > 5_000_000:
            raise ValueError("too many candidate bases for brute-force vertex enumeration")
        found = []
        for act in itertools.combinations(range(Ain.shape[0]), k):
            M = np.vstack([Aeq, Ain[list(act)]])
            if np.linalg.matrix_rank(M) < n:
                continue
            z = np.linalg.lstsq(M, np.concatenate([beq, bin_[list(act)]]), rcond=None)[0]
            if self.residual(z) <= tol * (1 + np.abs(z).max()):
                found.append(z)
                if len(found) > 50 * max_vertices:
                    break
        if not found:
            return np.zeros((0, n))
        V = _unique_rows(np.array(found), 1e-7)
        if V.shape[0] > max_vertices:
            raise ValueError(f"set has more than {max_vertices} vertices")
        return V

    def to_text(self) -> str:
        return self.lp().to_text()


def _same_structure(a: Polyhedron, b: Polyhedron) -> bool:
    return (a.W.shape == b.W.shape and a.W.nnz == b.W.nnz and np.array_equal(a.W.indptr, b.W.indptr)
            and np.array_equal(a.W.indices, b.W.indices))


def _sync(model: LpModel, old: Polyhedron, new: Polyhedron) -> None:
    rows = np.flatnonzero((old.rhs != new.rhs) | (old.senses != new.senses))
    if rows.size:
        model.set_rhs(new.senses[rows], new.rhs[rows], rows)
    cols = np.flatnonzero((old.lb != new.lb) | (old.ub != new.ub))
    if cols.size:
        model.set_col_bounds(new.lb[cols], new.ub[cols], cols)
    nz = np.flatnonzero(old.W.data != new.W.data)
    if nz.size:
        row_of = np.repeat(np.arange(new.W.shape[0]), np.diff(new.W.indptr))
        model.change_coeffs(row_of[nz], new.W.indices[nz], new.W.data[nz])


def _unique_rows(X, tol):
    out: list[np.ndarray] = []
    for x in X:
        if not any(np.max(np.abs(x - y)) <= tol for y in out):
            out.append(x)
    return np.array(out) if out else np.zeros((0, X.shape[1]))


def _extreme_rows(P):
    """Drop rows that are convex combinations of the other rows."""
    keep = []
    for i in range(P.shape[0]):
        others = np.delete(P, i, axis=0)
        if others.shape[0] == 0:
            keep.append(i)
            continue
        k = others.shape[0]
        A = sparse.csr_matrix(np.vstack([others.T, np.ones((1, k))]))
        prob = LpProblem(np.zeros(k), A, np.full(A.shape[0], "="), np.r_[P[i], 1.0], np.zeros(k), None)
        if not LpModel(prob).solve().optimal:
            keep.append(i)
    return P[keep]


# ---------------------------------------------------------------------- demand
@lru_cache(maxsize=64)
def _demand_labels(nt: int, nd: int) -> tuple[str, ...]:
    out = []
    for name in ("d", "dp", "dm"):
        out += [f"{name}[{t + 2},{j}]" for t in range(nt) for j in range(nd)]
    return tuple(out)


def build_demand_set(dbar, dhat, gamma_d: float) -> Polyhedron:
    """Budgeted static set for loads, one block per period.

    ``dbar`` and ``dhat`` are (periods x loads); the deviation of each load is
    split as ``d = dbar + dp - dm`` so the l1 and box limits stay linear.
    """
    dbar = np.atleast_2d(np.asarray(dbar, dtype=float))
    dhat = np.broadcast_to(np.asarray(dhat, dtype=float), dbar.shape)
    if np.any(dhat <= 0):
        raise ValueError("demand deviations dhat must be positive")
    if gamma_d < 0:
        raise ValueError("gamma_d must be nonnegative")
    nt, nd = dbar.shape
    n = nt * nd
    d, dp, dm = np.arange(n), n + np.arange(n), 2 * n + np.arange(n)
    one = np.ones(n)
    per = np.repeat(np.arange(nt), nd)
    inv = 1.0 / dhat.ravel()
    rows = np.r_[np.arange(n), np.arange(n), np.arange(n),          # d - dp + dm = dbar
                 n + np.arange(n), n + np.arange(n),                # dp + dm <= gamma dhat
                 2 * n + per, 2 * n + per]                          # sum (dp + dm)/dhat <= gamma sqrt(nd)
    cols = np.r_[d, dp, dm, dp, dm, dp, dm]
    vals = np.r_[one, -one, one, one, one, inv, inv]
    W = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n + nt, 3 * n))
    W.sort_indices()
    senses = np.array(["="] * n + ["<"] * (n + nt), dtype="<U1")
    rhs = np.r_[dbar.ravel(), gamma_d * dhat.ravel(), np.full(nt, gamma_d * sqrt(nd))]
    lb = np.r_[np.full(n, -np.inf), np.zeros(2 * n)]
    ub = np.full(3 * n, np.inf)
    z0 = np.zeros(3 * n)
    z0[d] = dbar.ravel()
    box = None
    if nd == 1 or gamma_d == 0:
        box = (dbar.ravel() - gamma_d * dhat.ravel(), dbar.ravel() + gamma_d * dhat.ravel())
    return Polyhedron(_demand_labels(nt, nd), W, senses, rhs, lb, ub, d, z0, box).check_nonempty()


def _nominal_path(seasonal: SeasonalModel, var: VarModel, history, kind: str, T: int, t1: int):
    """Seasonal pattern, zero-innovation residual path and observed residuals.

    For the static kinds the pattern carries the latest observed deviation
    forward (persistence) and the VAR memory is dropped.
    """
    N = var.n_sites
    L = var.lags if kind == "dus" else 0
    hist = np.atleast_2d(np.asarray(history, dtype=float)) if history is not None else np.zeros((0, N))
    if hist.shape[0] < max(L, 1) or hist.shape[1] != N:
        raise ValueError(f"history must provide at least {max(L, 1)} rows of {N} speeds")
    hist_t = t1 - np.arange(hist.shape[0])[::-1]
    hist_res = hist - seasonal.evaluate(hist_t)
    g = seasonal.evaluate(t1 + np.arange(1, T))
    if kind != "dus":
        g = g + hist_res[-1]
    A = var.A[:L]
    # lags at or before period 1 are observed
    nom_rt = np.zeros((T - 1, N))
    for k in range(T - 1):
        for s in range(1, L + 1):
            lag = k - s
            nom_rt[k] += A[s - 1] @ (nom_rt[lag] if lag >= 0 else hist_res[lag])
    return g, nom_rt, hist_res


def nominal_wind_power(seasonal: SeasonalModel, var: VarModel, history, curves: Sequence[PowerCurvePWL],
                       T: int, t1: int, kind: str = "dus") -> np.ndarray:
    """Available-wind forecast for periods 2..T: the power curve at the nominal speeds.

    This is exactly the ``pbar`` block of the set's nominal point, so a
    look-ahead dispatch fed with it sees the zero-budget set.
    """
    g, nom_rt, _ = _nominal_path(seasonal, var, history, kind, T, t1)
    r = np.maximum(0.0, g + nom_rt)
    return np.column_stack([c.evaluate(r[:, i]) for i, c in enumerate(curves)])


# ------------------------------------------------------------------------ wind
def build_wind_trajectory_set(seasonal: SeasonalModel, var: VarModel, history, spec: SetSpec,
                              curves: Sequence[PowerCurvePWL], T: int, t1: int) -> Polyhedron:
    """Wind-speed and available-wind trajectory set for periods 2..T.

    Parameters
    ----------
    seasonal, var : fitted models.  For the static kinds the VAR memory is
        ignored; ``sus2`` also replaces B by ``diag(sqrt(diag(sigma)))``.
    history : array (>= max(L, 1), N)
        Observed speeds, oldest first; the last row is period 1 at absolute
        index ``t1``.
    spec : budgets and set kind.
    curves : one power curve per wind farm.

    Lifted variables per period and site are the speed ``r``, its residual
    ``rt``, the split innovation ``up - um`` and available power ``pbar``.
    """
    N = var.n_sites
    if len(curves) != N or seasonal.n_sites != N:
        raise ValueError("models and power curves disagree on the number of wind farms")
    if any(c.pieces < 1 for c in curves):
        raise ValueError("every power curve needs at least one piece")
    if T < 2:
        raise ValueError("trajectory sets need T >= 2")
    L = var.lags if spec.kind == "dus" else 0
    g, nom_rt, hist_res = _nominal_path(seasonal, var, history, spec.kind, T, t1)
    nom_r = g + nom_rt
    A = var.A[:L]
    B = var.B
    if spec.kind == "sus2":
        B = np.diag(np.sqrt(np.clip(np.diag(var.sigma), 0.0, None)))

    W, senses = _wind_structure(var, B, L, tuple(curves), T, spec.gamma_t is not None)
    gw = spec.gamma_w
    n = (T - 1) * N
    blk = np.arange(n).reshape(T - 1, N)
    r, rt, pb = blk, blk + n, blk + 4 * n
    # contribution of observed lags to the residual dynamics
    known = np.zeros((T - 1, N))
    for k in range(T - 1):
        for s_ in range(k + 1, L + 1):
            known[k] += A[s_ - 1] @ hist_res[k - s_]
    rhs = [g.ravel(), known.ravel(), np.full(T - 1, gw * sqrt(N)), np.full(n, gw)]
    rhs += [np.tile(c.h0, T - 1) for c in curves]
    if spec.gamma_t is not None:
        rhs.append([spec.gamma_t * gw * sqrt(N) * sqrt(T - 1)])
    # r >= 0, relaxed to the nominal value where the forecast itself dips below zero
    lb = np.r_[np.minimum(0.0, nom_r.ravel()), np.full(n, -np.inf), np.zeros(3 * n)]
    ub = np.full(5 * n, np.inf)
    z0 = np.zeros(5 * n)
    z0[r.ravel()] = nom_r.ravel()
    z0[rt.ravel()] = nom_rt.ravel()
    r0 = np.maximum(0.0, nom_r)
    for i in range(N):
        z0[pb[:, i]] = curves[i].evaluate(r0[:, i])
    return Polyhedron(_wind_labels(T - 1, N), W, senses, np.concatenate(rhs), lb, ub,
                      pb.ravel(), z0).check_nonempty()


_STRUCTURES: OrderedDict = OrderedDict()


def _wind_structure(var: VarModel, B, L: int, curves: tuple, T: int, time_budget: bool):
    """Constraint matrix and senses of the wind set.

    They depend only on the fitted dynamics, the curves and the horizon, so
    a rolling run reuses one copy per fit.
    """
    key = (id(var), L, tuple(id(c) for c in curves), T, time_budget, B.tobytes())
    hit = _STRUCTURES.get(key)
    if hit is not None and hit[0] is var and all(a is b for a, b in zip(hit[1], curves)):
        _STRUCTURES.move_to_end(key)
        return hit[2], hit[3]
    N = var.n_sites
    A = var.A[:L]
    n = (T - 1) * N
    blk = np.arange(n).reshape(T - 1, N)
    r, rt, up, um, pb = (blk + q * n for q in range(5))
    R, C, V = [], [], []

    def put(rows, cols, vals):
        R.append(np.ravel(rows))
        C.append(np.ravel(cols))
        V.append(np.ravel(vals).astype(float))

    # r - rt = g
    link = np.arange(n)
    put(link, r, np.ones(n))
    put(link, rt, -np.ones(n))
    # rt_t - sum_s A_s rt_{t-s} - B (up - um) = contribution of observed lags
    dyn = (n + np.arange(n)).reshape(T - 1, N)
    put(dyn, rt, np.ones(n))
    for k in range(T - 1):
        for s_ in range(1, min(k, L) + 1):
            rr, cc = np.meshgrid(dyn[k], rt[k - s_], indexing="ij")
            put(rr, cc, -A[s_ - 1])
        rr, cc = np.meshgrid(dyn[k], up[k], indexing="ij")
        put(rr, cc, -B)
        rr, cc = np.meshgrid(dyn[k], um[k], indexing="ij")
        put(rr, cc, B)
    # budgets on the split innovations
    l1 = 2 * n + np.arange(T - 1)
    put(np.repeat(l1, N), up, np.ones(n))
    put(np.repeat(l1, N), um, np.ones(n))
    bx = 2 * n + (T - 1) + np.arange(n)
    put(bx, up, np.ones(n))
    put(bx, um, np.ones(n))
    nrow = 3 * n + (T - 1)
    senses = ["="] * (2 * n) + ["<"] * (n + T - 1)
    # available power above every supporting line of the power curve
    for i, c in enumerate(curves):
        K = c.pieces
        rows = nrow + np.arange((T - 1) * K).reshape(T - 1, K)
        put(rows, np.repeat(pb[:, i], K).reshape(T - 1, K), np.ones((T - 1, K)))
        put(rows, np.repeat(r[:, i], K).reshape(T - 1, K), -np.tile(c.h, (T - 1, 1)))
        senses += [">"] * ((T - 1) * K)
        nrow += (T - 1) * K
    if time_budget:
        put(np.full(2 * n, nrow), np.r_[up.ravel(), um.ravel()], np.ones(2 * n))
        senses.append("<")
        nrow += 1
    V_ = np.concatenate(V)
    nz = V_ != 0
    W = sparse.csr_matrix((V_[nz], (np.concatenate(R)[nz], np.concatenate(C)[nz])), shape=(nrow, 5 * n))
    W.sum_duplicates()
    W.sort_indices()
    senses = np.array(senses, dtype="<U1")
    _STRUCTURES[key] = (var, curves, W, senses)
    if len(_STRUCTURES) > 32:
        _STRUCTURES.popitem(last=False)
    return W, senses


@lru_cache(maxsize=64)
def _wind_labels(nt: int, N: int) -> tuple[str, ...]:
    out = []
    for name in ("r", "rt", "up", "um", "pbar"):
        out += [f"{name}[{t + 2},{i}]" for t in range(nt) for i in range(N)]
    return tuple(out)


# ------------------------------------------------------------------- products
def product_set(first: Polyhedron, second: Polyhedron) -> Polyhedron:
    """Cartesian product; ``xi`` is ``first``'s block followed by ``second``'s."""
    clash = set(first.labels) & set(second.labels)
    if clash:
        raise ValueError(f"label collision in product set: {sorted(clash)[:3]}")
    n1 = first.n_vars
    W = sparse.block_diag([first.W, second.W], format="csr")
    W.sort_indices()
    point = None
    if first.point is not None and second.point is not None:
        point = np.r_[first.point, second.point]
    box = None
    if first.box is not None and second.box is not None:
        box = (np.r_[first.box[0], second.box[0]], np.r_[first.box[1], second.box[1]])
    return Polyhedron(first.labels + second.labels, W, np.r_[first.senses, second.senses],
                      np.r_[first.rhs, second.rhs], np.r_[first.lb, second.lb], np.r_[first.ub, second.ub],
                      np.r_[first.xi_index, second.xi_index + n1], point, box)


def box_set(lo, hi, labels=None, point=None) -> Polyhedron:
    """Axis-aligned box ``lo <= xi <= hi`` (no auxiliary variables)."""
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box needs lo <= hi of equal shape")
    n = lo.size
    labels = tuple(labels) if labels is not None else tuple(f"xi[{j}]" for j in range(n))
    point = 0.5 * (lo + hi) if point is None else np.asarray(point, float)
    return Polyhedron(labels, sparse.csr_matrix((0, n)), np.array([], dtype="<U1"), np.zeros(0),
                      lo, hi, np.arange(n), point, (lo, hi))


def singleton_set(xi, labels=None) -> Polyhedron:
    xi = np.asarray(xi, dtype=float).ravel()
    return box_set(xi, xi, labels, xi)
