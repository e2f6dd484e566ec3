"""Seeded random LPs with a bounded box, shared by the LP tests and acceptance checks."""

from __future__ import annotations

import numpy as np

from peakreg.lp import EQ, GE, LE, Affine, LinearProgram


def random_lp(seed: int, max_vars: int = 8):
    """Return ``(lp, dense)`` where ``dense`` feeds the vertex-enumeration oracle."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_vars + 1))
    m = int(rng.integers(1, 5 if n < 7 else 3))
    c = rng.integers(-9, 10, n).astype(float)
    lo = rng.integers(-3, 1, n).astype(float)
    hi = lo + rng.integers(1, 5, n)
    lp = LinearProgram()
    lp.add_variables(n, cost=c, lo=lo, hi=hi)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    x_ref = rng.uniform(lo, hi)  # keeps most instances feasible
    for _ in range(m):
        a = rng.integers(-5, 6, n).astype(float)
        if not a.any():
            a[0] = 1.0
        kind = rng.choice([LE, GE, EQ], p=[0.45, 0.35, 0.2])
        slack = float(rng.integers(0, 4))
        rhs = float(np.round(a @ x_ref)) + (slack if kind == LE else -slack if kind == GE else 0.0)
        lp.add_constraints(Affine(np.zeros(n, dtype=np.int64), np.arange(n), a, [0.0]), kind, rhs)
        if kind == LE:
            A_ub.append(a)
            b_ub.append(rhs)
        elif kind == GE:
            A_ub.append(-a)
            b_ub.append(-rhs)
        else:
            A_eq.append(a)
            b_eq.append(rhs)
    return lp, (c, A_ub, b_ub, A_eq, b_eq, lo, hi)
