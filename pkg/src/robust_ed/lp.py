"""Thin LP layer over HiGHS.

Every model in this package reduces to linear programs.  ``lp_solve`` is the
one-shot entry point; :class:`LpModel` keeps a HiGHS instance alive so that
repeated solves with a new right-hand side or objective warm-start from the
previous basis (the alternating-direction and master loops rely on this).

Row duals follow the derivative convention: ``duals[i]`` is d(objective)/d(rhs_i)
for both minimisation and maximisation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import highspy
import numpy as np
from scipy import sparse

INF = highspy.kHighsInf

_STATUS = {
    highspy.HighsModelStatus.kOptimal: "optimal",
    highspy.HighsModelStatus.kInfeasible: "infeasible",
    highspy.HighsModelStatus.kUnbounded: "unbounded",
    highspy.HighsModelStatus.kUnboundedOrInfeasible: "unbounded_or_infeasible",
}


class LpError(RuntimeError):
    """Raised when an LP that must be solvable is not."""


@dataclass
class LpProblem:
    """``min/max c'x`` s.t. ``A x (<=,>=,=) rhs`` and ``lb <= x <= ub``.

    ``senses`` holds one of ``'<'``, ``'>'``, ``'='`` per row.
    """

    c: np.ndarray
    A: sparse.spmatrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = False
    col_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.A = sparse.csr_matrix(self.A)
        if self.A.shape[1] != n:
            raise ValueError("constraint matrix column count does not match objective length")
        self.senses = np.asarray(self.senses, dtype="<U1")
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.senses.shape[0] != self.A.shape[0] or self.rhs.shape[0] != self.A.shape[0]:
            raise ValueError("senses/rhs length must equal row count")
        bad = set(np.unique(self.senses)) - {"<", ">", "="}
        if bad:
            raise ValueError(f"unknown constraint senses {sorted(bad)}")
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A.data))):
            raise ValueError("LP coefficients must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return senses_to_bounds(self.senses, self.rhs)

    def to_text(self) -> str:
        """Plain LP-style listing, for eyeballing small models."""
        cols = self.col_names or [f"x{j}" for j in range(self.A.shape[1])]
        rows = self.row_names or [f"c{i}" for i in range(self.A.shape[0])]
        out = ["maximize" if self.maximize else "minimize"]
        out.append("  obj: " + _linear(self.c, cols))
        out.append("subject to")
        A = self.A.tocsr()
        op = {"<": "<=", ">": ">=", "=": "="}
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            coef = dict(zip(A.indices[lo:hi], A.data[lo:hi]))
            terms = " ".join(f"{v:+.6g} {cols[j]}" for j, v in coef.items()) or "0"
            out.append(f"  {rows[i]}: {terms} {op[self.senses[i]]} {self.rhs[i]:.6g}")
        out.append("bounds")
        for j, name in enumerate(cols):
            out.append(f"  {self.lb[j]:.6g} <= {name} <= {self.ub[j]:.6g}")
        out.append("end")
        return "\n".join(out)


def _linear(coefs, names):
    terms = [f"{v:+.6g} {names[j]}" for j, v in enumerate(coefs) if v != 0]
    return " ".join(terms) if terms else "0"


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = field(default_factory=lambda: np.empty(0))
    duals: np.ndarray = field(default_factory=lambda: np.empty(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.empty(0))
    objective: float = np.nan

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def senses_to_bounds(senses, rhs):
    senses = np.asarray(senses)
    rhs = np.asarray(rhs, dtype=float)
    lo = np.where(senses == "<", -INF, rhs)
    hi = np.where(senses == ">", INF, rhs)
    return lo, hi


def _inf(a):
    a = np.array(a, dtype=float)
    a[np.isposinf(a)] = INF
    a[np.isneginf(a)] = -INF
    return a


class LpModel:
    """A persistent HiGHS model with warm-started re-solves."""

    def __init__(self, problem: LpProblem):
        self.problem = problem
        self._h = highspy.Highs()
        self._h.setOptionValue("output_flag", False)
        self._h.setOptionValue("random_seed", 0)
        self._h.setOptionValue("threads", 1)
        m, n = problem.A.shape
        lp = highspy.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = m
        lp.col_cost_ = problem.c.copy()
        lp.col_lower_ = _inf(problem.lb)
        lp.col_upper_ = _inf(problem.ub)
        lo, hi = problem.row_bounds()
        lp.row_lower_ = _inf(lo)
        lp.row_upper_ = _inf(hi)
        A = sparse.csc_matrix(problem.A)
        A.sort_indices()
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr.astype(np.int32)
        lp.a_matrix_.index_ = A.indices.astype(np.int32)
        lp.a_matrix_.value_ = A.data.astype(float)
        lp.a_matrix_.num_col_ = n
        lp.a_matrix_.num_row_ = m
        if problem.maximize:
            lp.sense_ = highspy.ObjSense.kMaximize
        self._h.passModel(lp)
        self.n_cols = n
        self.n_rows = m

    def set_row_bounds(self, lower, upper, rows=None):
        rows = np.arange(self.n_rows, dtype=np.int32) if rows is None else np.asarray(rows, dtype=np.int32)
        self._h.changeRowsBounds(len(rows), rows, _inf(lower), _inf(upper))

    def set_rhs(self, senses, rhs, rows=None):
        lo, hi = senses_to_bounds(senses, rhs)
        self.set_row_bounds(lo, hi, rows)

    def set_col_bounds(self, lower, upper, cols=None):
        cols = np.arange(self.n_cols, dtype=np.int32) if cols is None else np.asarray(cols, dtype=np.int32)
        self._h.changeColsBounds(len(cols), cols, _inf(lower), _inf(upper))

    def set_objective(self, c, cols=None):
        cols = np.arange(self.n_cols, dtype=np.int32) if cols is None else np.asarray(cols, dtype=np.int32)
        self._h.changeColsCost(len(cols), cols, np.asarray(c, dtype=float))

    def change_coeffs(self, rows, cols, vals):
        for i, j, v in zip(np.asarray(rows).tolist(), np.asarray(cols).tolist(), np.asarray(vals, float).tolist()):
            self._h.changeCoeff(i, j, v)

    def add_cols(self, cost, lb, ub, A_block: sparse.spmatrix):
        """Append columns; ``A_block`` has one row per existing model row."""
        A = sparse.csc_matrix(A_block)
        A.sort_indices()
        k = A.shape[1]
        self._h.addCols(k, np.asarray(cost, float), _inf(lb), _inf(ub), A.nnz,
                        A.indptr[:-1].astype(np.int32), A.indices.astype(np.int32), A.data.astype(float))
        self.n_cols += k

    def add_rows(self, senses, rhs, A_block: sparse.spmatrix):
        A = sparse.csr_matrix(A_block)
        A.sort_indices()
        lo, hi = senses_to_bounds(senses, rhs)
        k = A.shape[0]
        self._h.addRows(k, _inf(lo), _inf(hi), A.nnz,
                        A.indptr[:-1].astype(np.int32), A.indices.astype(np.int32), A.data.astype(float))
        self.n_rows += k

    def delete_rows(self, rows):
        rows = np.asarray(rows, dtype=np.int32)
        self._h.deleteRows(len(rows), rows)
        self.n_rows -= len(rows)

    def delete_cols(self, cols):
        cols = np.asarray(cols, dtype=np.int32)
        self._h.deleteCols(len(cols), cols)
        self.n_cols -= len(cols)

    def solve(self) -> LpSolution:
        h = self._h
        h.run()
        status = _STATUS.get(h.getModelStatus(), "error")
        if status == "unbounded_or_infeasible":
            # presolve could not tell which; ask the simplex directly
            h.setOptionValue("presolve", "off")
            h.clearSolver()
            h.run()
            h.setOptionValue("presolve", "choose")
            status = _STATUS.get(h.getModelStatus(), "error")
        if status != "optimal":
            return LpSolution(status=status)
        sol = h.getSolution()
        return LpSolution(
            status="optimal",
            x=np.array(sol.col_value),
            duals=np.array(sol.row_dual),
            reduced_costs=np.array(sol.col_dual),
            objective=h.getInfo().objective_function_value,
        )


def lp_solve(problem: LpProblem) -> LpSolution:
    """Solve ``problem`` from scratch.

    Infeasible and unbounded outcomes come back as a status, not an exception.
    """
    return LpModel(problem).solve()
