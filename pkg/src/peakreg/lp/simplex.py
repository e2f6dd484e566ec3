"""Dense bounded-variable primal simplex.

Rows are turned into equalities with one logical variable each
(``a x + w = b``); a row's sense becomes the bounds of its logical. Rows whose
logical cannot absorb the initial residual get an artificial variable, and a
phase-1 pass drives the artificials to zero. The tableau ``B^-1 A`` is kept
explicitly and rebuilt from the original data every ``refactor_every``
pivots and before optimality is declared.

The ratio test is Harris's two-pass rule, which prefers large pivots among
near-ties so the basis stays well conditioned. Pricing is Dantzig's rule; after ``bland_after`` consecutive degenerate
pivots the kernel switches to Bland's rule until progress resumes, so the
method cannot cycle.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .. import kernels
from .model import EQ, GE, LE, LinearProgram, LpSolution, SolverError, primal_residual

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIV_TOL = 1e-7
HARRIS_TOL = 1e-9  # bound relaxation in the ratio test
DROP_TOL = 1e-13
MAX_ITER = 10**6


def _initial_value(lo: float, hi: float) -> tuple[float, int]:
    if lo > -np.inf:
        return lo, kernels.FIXED if lo == hi else kernels.AT_LOWER
    if hi < np.inf:
        return hi, kernels.AT_UPPER
    return 0.0, kernels.FREE


class _Tableau:
    def __init__(self, Af, b, cost, lo, hi, x, status, basis, kernel):
        self.Af = Af
        self.b = b
        self.cost = cost
        self.lo = lo
        self.hi = hi
        self.x = x
        self.status = status
        self.basis = basis
        self.kernel = kernel
        self.M = None
        self.d = None
        self.state = np.zeros(4, dtype=np.int64)

    def refactor(self):
        Af, basis = self.Af, self.basis
        B = Af[:, basis]
        lu = la.lu_factor(B, check_finite=False)
        M = la.lu_solve(lu, Af, check_finite=False)
        M[np.abs(M) < DROP_TOL] = 0.0
        M[:, basis] = np.eye(len(basis))
        nonbasic = self.status != kernels.BASIC
        rhs = self.b - Af[:, nonbasic] @ self.x[nonbasic]
        self.x[basis] = la.lu_solve(lu, rhs, check_finite=False)
        self.M = np.ascontiguousarray(M)
        self.price()

    def price(self):
        y = self.cost[self.basis] @ self.M
        d = self.cost - y
        d[self.basis] = 0.0
        self.d = np.ascontiguousarray(d)

    def run(self, max_iter, refactor_every, tol_opt, bland_after):
        """Iterate to optimality or unboundedness; returns a kernel status code.

        A terminal status is only accepted when it is reached without a pivot
        on a freshly rebuilt tableau.
        """
        k = self.kernel
        while True:
            budget = min(refactor_every, max_iter - int(self.state[2]))
            if budget <= 0:
                raise SolverError(f"simplex iteration cap {max_iter} reached")
            before = int(self.state[2])
            code = k.iterate(self.M, self.x, self.d, self.basis, self.status, self.lo, self.hi,
                             budget, PIV_TOL, HARRIS_TOL, tol_opt, bland_after, self.state)
            if code != kernels.ITER_LIMIT and int(self.state[2]) == before:
                return code
            self.refactor()


def solve_dense(lp: LinearProgram, *, backend: str | None = None, max_iter: int = MAX_ITER,
                refactor_every: int | None = None, bland_after: int = 50) -> LpSolution:
    c, A, senses, b, lo, hi = lp.matrices()
    kernel = kernels.get(backend)
    method = f"simplex/{kernel.BACKEND}"
    n, m = A.shape[1], A.shape[0]
    if np.any(lo > hi):
        return LpSolution("infeasible", np.full(n, np.nan), np.nan, 0, method)

    A = A.toarray()
    # presolve: empty rows must be satisfied by 0, empty columns go to their best bound
    row_nnz = np.count_nonzero(A, axis=1)
    for i in np.flatnonzero(row_nnz == 0):
        ok = (senses[i] == LE and b[i] >= -FEAS_TOL) or (senses[i] == GE and b[i] <= FEAS_TOL) \
            or (senses[i] == EQ and abs(b[i]) <= FEAS_TOL)
        if not ok:
            return LpSolution("infeasible", np.full(n, np.nan), np.nan, 0, method)
    keep_rows = row_nnz > 0
    A, senses, b = A[keep_rows], senses[keep_rows], b[keep_rows]
    m = A.shape[0]

    x_out = np.zeros(n)
    col_nnz = np.count_nonzero(A, axis=0)
    empty = col_nnz == 0
    for j in np.flatnonzero(empty):
        if c[j] > 0:
            x_out[j] = lo[j]
        elif c[j] < 0:
            x_out[j] = hi[j]
        else:
            x_out[j] = _initial_value(lo[j], hi[j])[0]
        if not np.isfinite(x_out[j]):
            return LpSolution("unbounded", np.full(n, np.nan), -np.inf, 0, method)
    cols = np.flatnonzero(~empty)
    A = A[:, cols]
    ns = cols.size

    wl = np.where(senses == GE, -np.inf, 0.0)
    wu = np.where(senses == LE, np.inf, 0.0)

    x0 = np.empty(ns)
    st0 = np.empty(ns, dtype=np.int8)
    for q, j in enumerate(cols):
        x0[q], st0[q] = _initial_value(lo[j], hi[j])
    resid = b - A @ x0

    # logical basis where it fits, artificial variables elsewhere
    art_rows = []
    art_sign = []
    xw = np.zeros(m)
    stw = np.empty(m, dtype=np.int8)
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        if wl[i] - FEAS_TOL <= resid[i] <= wu[i] + FEAS_TOL:
            xw[i] = min(max(resid[i], wl[i]), wu[i])
            stw[i] = kernels.BASIC
            basis[i] = ns + i
        else:
            xw[i], stw[i] = _initial_value(wl[i], wu[i])
            if wl[i] > -np.inf and wu[i] < np.inf:
                stw[i] = kernels.FIXED
            art_rows.append(i)
            art_sign.append(1.0 if resid[i] - xw[i] > 0 else -1.0)
    na = len(art_rows)
    N = ns + m + na
    Af = np.zeros((m, N))
    Af[:, :ns] = A
    Af[:, ns:ns + m] = np.eye(m)
    xa = np.zeros(na)
    for q, (i, s) in enumerate(zip(art_rows, art_sign)):
        Af[i, ns + m + q] = s
        xa[q] = abs(resid[i] - xw[i])
        basis[i] = ns + m + q

    lo_f = np.concatenate([lo[cols], wl, np.zeros(na)])
    hi_f = np.concatenate([hi[cols], wu, np.full(na, np.inf)])
    x = np.concatenate([x0, xw, xa])
    status = np.concatenate([st0, stw, np.full(na, kernels.BASIC, dtype=np.int8)])
    cost2 = np.concatenate([c[cols], np.zeros(m + na)])

    if refactor_every is None:
        refactor_every = max(200, m)
    tab = _Tableau(Af, b.astype(np.float64), None, lo_f, hi_f, x, status, basis, kernel)

    if na:
        cost1 = np.zeros(N)
        cost1[ns + m:] = 1.0
        tab.cost = cost1
        tab.refactor()
        tab.run(max_iter, refactor_every, OPT_TOL, bland_after)
        infeas = float(tab.x[ns + m:].sum())
        if infeas > FEAS_TOL:
            return LpSolution("infeasible", np.full(n, np.nan), np.nan, int(tab.state[2]), method)
        # artificials are pinned at zero from here on
        tab.hi[ns + m:] = 0.0
        tab.x[ns + m:] = np.where(tab.status[ns + m:] == kernels.BASIC, tab.x[ns + m:], 0.0)
        nb = tab.status[ns + m:] != kernels.BASIC
        tab.status[ns + m:][nb] = kernels.FIXED

    scale = float(np.max(np.abs(cost2), initial=0.0))
    tol_opt = OPT_TOL * scale if scale > 0 else OPT_TOL
    tab.cost = cost2
    tab.state[:2] = 0
    tab.refactor()
    code = tab.run(max_iter, refactor_every, tol_opt, bland_after)
    iters = int(tab.state[2])
    if code == kernels.UNBOUNDED:
        return LpSolution("unbounded", np.full(n, np.nan), -np.inf, iters, method)

    x_out[cols] = tab.x[:ns]
    # snap nonbasic structurals exactly onto their bounds
    x_out = np.clip(x_out, lo, hi)
    obj = float(c @ x_out) + lp.objective_constant
    sol = LpSolution("optimal", x_out, obj, iters, method)
    res = primal_residual(lp, x_out)
    if res > FEAS_TOL:
        raise SolverError(f"primal residual {res:.3e} exceeds {FEAS_TOL:g} after {iters} pivots")
    return sol
