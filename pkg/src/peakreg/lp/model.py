"""Linear program container and the reformulation helpers used by the optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<", "=", ">"
_SENSES = (LE, EQ, GE)


class SolverError(RuntimeError):
    """The solver broke down (iteration cap, numerical failure)."""


@dataclass
class Affine:
    """One or more affine expressions ``E x + const`` stored as COO triplets.

    Row ``i`` of the block is ``sum(vals[rows == i] * x[cols[rows == i]]) + const[i]``.
    """

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    const: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        self.cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        self.vals = np.asarray(self.vals, dtype=np.float64).reshape(-1)
        self.const = np.atleast_1d(np.asarray(self.const, dtype=np.float64))
        if not (self.rows.size == self.cols.size == self.vals.size):
            raise ValueError("rows, cols and vals must have equal length")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.const.size):
            raise ValueError("expression row index out of range")

    @classmethod
    def single(cls, idx, coef, const: float = 0.0) -> Affine:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        coef = np.broadcast_to(np.asarray(coef, dtype=np.float64), idx.shape)
        return cls(np.zeros(idx.size, dtype=np.int64), idx, coef, [const])

    @classmethod
    def constant(cls, value: float) -> Affine:
        return cls([], [], [], [value])

    @classmethod
    def stack(cls, exprs: list[Affine]) -> Affine:
        rows, cols, vals, const = [], [], [], []
        offset = 0
        for e in exprs:
            rows.append(e.rows + offset)
            cols.append(e.cols)
            vals.append(e.vals)
            const.append(e.const)
            offset += len(e)
        if not exprs:
            return cls([], [], [], np.empty(0))
        return cls(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), np.concatenate(const))

    def __len__(self) -> int:
        return self.const.size

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = self.const.copy()
        np.add.at(out, self.rows, self.vals * x[self.cols])
        return out


@dataclass
class LinearProgram:
    """``minimize c x + constant`` subject to sparse rows and variable bounds."""

    cost: list = field(default_factory=list)
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    objective_constant: float = 0.0
    names: list = field(default_factory=list)

    def __post_init__(self):
        self._r: list[np.ndarray] = []
        self._c: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._nrows = 0

    @property
    def n_vars(self) -> int:
        return len(self.cost)

    @property
    def n_rows(self) -> int:
        return self._nrows

    def add_variables(self, n: int, cost=0.0, lo=0.0, hi=np.inf, name: str = "x") -> np.ndarray:
        start = self.n_vars
        for seq, val in ((self.cost, cost), (self.lower, lo), (self.upper, hi)):
            seq.extend(np.broadcast_to(np.asarray(val, dtype=np.float64), (n,)).tolist())
        self.names.extend(f"{name}[{i}]" for i in range(n))
        return np.arange(start, start + n, dtype=np.int64)

    def add_variable(self, cost=0.0, lo=0.0, hi=np.inf, name: str = "x") -> int:
        idx = int(self.add_variables(1, cost, lo, hi, name)[0])
        self.names[idx] = name
        return idx

    def add_cost(self, idx, coef) -> None:
        idx = np.atleast_1d(idx)
        coef = np.broadcast_to(np.asarray(coef, dtype=np.float64), idx.shape)
        for i, v in zip(idx.tolist(), coef.tolist()):
            self.cost[i] += v

    def add_constraints(self, expr: Affine, sense: str, rhs=0.0) -> np.ndarray:
        """Add ``expr (sense) rhs`` row-wise; the expression constant moves to the rhs."""
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        k = len(expr)
        if expr.cols.size and expr.cols.max() >= self.n_vars:
            raise ValueError("constraint references an undeclared variable")
        rhs = np.broadcast_to(np.asarray(rhs, dtype=np.float64), (k,)) - expr.const
        self._r.append(expr.rows + self._nrows)
        self._c.append(expr.cols)
        self._v.append(expr.vals)
        self._sense.append(np.full(k, sense))
        self._rhs.append(np.asarray(rhs, dtype=np.float64))
        first = self._nrows
        self._nrows += k
        return np.arange(first, self._nrows)

    def add_constraint(self, idx, coef, sense: str, rhs: float) -> int:
        return int(self.add_constraints(Affine.single(idx, coef), sense, rhs)[0])

    def matrices(self):
        """Return ``(c, A, senses, b, lo, hi)`` with ``A`` in CSR form (duplicates summed)."""
        n = self.n_vars
        if self._r:
            rows = np.concatenate(self._r)
            cols = np.concatenate(self._c)
            vals = np.concatenate(self._v)
            senses = np.concatenate(self._sense)
            rhs = np.concatenate(self._rhs)
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            vals = rhs = np.empty(0)
            senses = np.empty(0, dtype="<U1")
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self._nrows, n))
        A.sum_duplicates()
        return (
            np.asarray(self.cost, dtype=np.float64),
            A,
            senses,
            rhs,
            np.asarray(self.lower, dtype=np.float64),
            np.asarray(self.upper, dtype=np.float64),
        )


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: np.ndarray
    objective_value: float
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def primal_residual(lp: LinearProgram, x) -> float:
    """Largest violation of any row or bound at ``x``."""
    c, A, senses, b, lo, hi = lp.matrices()
    x = np.asarray(x, dtype=np.float64)
    worst = 0.0
    if A.shape[0]:
        ax = A @ x
        viol = np.where(senses == LE, ax - b, np.where(senses == GE, b - ax, np.abs(ax - b)))
        worst = max(worst, float(np.max(viol, initial=0.0)))
    worst = max(worst, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))
    return worst


def abs_split(lp: LinearProgram, expr: Affine, weight=1.0, name: str = "abs") -> np.ndarray:
    """Add ``aux_i >= |expr_i|`` for every expression in the block.

    Each auxiliary variable carries objective ``weight``; with positive weight a
    minimizer drives ``aux_i`` down to ``|expr_i|``. Returns the aux indices.
    """
    k = len(expr)
    aux = lp.add_variables(k, cost=weight, lo=0.0, hi=np.inf, name=name)
    ident_r = np.arange(k)
    up = Affine(np.concatenate([ident_r, expr.rows]), np.concatenate([aux, expr.cols]),
                np.concatenate([np.ones(k), -expr.vals]), -expr.const)
    down = Affine(np.concatenate([ident_r, expr.rows]), np.concatenate([aux, expr.cols]),
                  np.concatenate([np.ones(k), expr.vals]), expr.const)
    lp.add_constraints(up, GE, 0.0)
    lp.add_constraints(down, GE, 0.0)
    return aux


def epigraph_max(lp: LinearProgram, expr: Affine, weight=1.0, lo=-np.inf, name: str = "epi") -> int:
    """Add one variable bounded below by every expression in the block."""
    k = len(expr)
    if k == 0:
        raise ValueError("epigraph of an empty family")
    aux = lp.add_variable(cost=weight, lo=lo, hi=np.inf, name=name)
    rows = np.concatenate([np.arange(k), expr.rows])
    cols = np.concatenate([np.full(k, aux), expr.cols])
    vals = np.concatenate([np.ones(k), -expr.vals])
    lp.add_constraints(Affine(rows, cols, vals, -expr.const), GE, 0.0)
    return aux
