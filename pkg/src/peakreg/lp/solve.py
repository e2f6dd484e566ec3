"""Solver front end: the embedded simplex for small programs, HiGHS for large ones."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import EQ, GE, LE, LinearProgram, LpSolution, SolverError, primal_residual
from .simplex import FEAS_TOL, solve_dense

# Largest dense tableau (rows x columns) handed to the embedded simplex by "auto".
DENSE_LIMIT = 3_000_000


def solve(lp: LinearProgram, method: str = "auto", **options) -> LpSolution:
    """Solve ``lp``.

    ``method`` is ``"simplex"`` (embedded dense bounded simplex), ``"highs"``
    (scipy's HiGHS dual simplex) or ``"auto"``, which picks the embedded
    simplex while its tableau stays under ``DENSE_LIMIT`` entries.
    Infeasible and unbounded programs are reported through ``status``.
    """
    if method == "auto":
        size = lp.n_rows * (lp.n_vars + 2 * lp.n_rows)
        method = "simplex" if size <= DENSE_LIMIT else "highs"
    if method == "simplex":
        return solve_dense(lp, **options)
    if method == "highs":
        return solve_highs(lp, **options)
    raise ValueError(f"unknown LP method {method!r}")


def solve_highs(lp: LinearProgram, time_limit: float | None = None) -> LpSolution:
    c, A, senses, b, lo, hi = lp.matrices()
    n = c.size
    le = senses == LE
    ge = senses == GE
    eq = senses == EQ
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([b[le], -b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    bounds = np.column_stack([np.where(np.isfinite(lo), lo, -np.inf), np.where(np.isfinite(hi), hi, np.inf)])
    opts = {"presolve": True}
    if time_limit is not None:
        opts["time_limit"] = time_limit
    if n == 0:
        return LpSolution("optimal", np.zeros(0), lp.objective_constant, 0, "highs")
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options=opts)
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpSolution("infeasible", np.full(n, np.nan), np.nan, iters, "highs")
    if res.status == 3:
        return LpSolution("unbounded", np.full(n, np.nan), -np.inf, iters, "highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed with status {res.status}: {res.message}")
    x = np.clip(np.asarray(res.x, dtype=np.float64), lo, hi)
    resid = primal_residual(lp, x)
    if resid > FEAS_TOL:
        raise SolverError(f"HiGHS solution violates constraints by {resid:.3e}")
    return LpSolution("optimal", x, float(c @ x) + lp.objective_constant, iters, "highs")
