"""Pure-Python/numpy implementations of the hot loops.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce the same floating-point results. Keep the two files in sync.
"""

from __future__ import annotations

import math

import numpy as np

# variable status codes shared with the simplex driver
BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE = 3
FIXED = 4

# leaving-row magnitude floor under Bland's rule, relative to the largest candidate pivot
BLAND_REL = 1e-3

# iterate() return codes
OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2

BACKEND = "python"


def iterate(M, x, d, basis, status, lo, hi, max_iter, tol_piv, tol_bound, tol_opt, bland_after, state):
    """Run bounded-variable primal simplex pivots on a dense tableau.

    M is B^-1 A (m x N), x holds every variable's current value, d the reduced
    costs. ``state`` is an int64[4] array carried between calls:
    [bland_mode, degenerate_run, iterations, last_entering]. Returns a status code.

    The ratio test is Harris's two-pass rule: the step bound is computed with
    variable bounds relaxed by ``tol_bound``, and among the rows blocking within
    that bound the largest pivot leaves (the lowest basis index among pivots
    within ``BLAND_REL`` of the largest while stalled).
    """
    inf = math.inf
    at_low = (status == AT_LOWER) | (status == FREE)
    at_up = (status == AT_UPPER) | (status == FREE)
    done = 0
    while done < max_iter:
        # pricing: Dantzig (largest violation) unless stalled, then Bland (first index)
        down = at_low & (d < -tol_opt)
        up = at_up & (d > tol_opt) & ~down
        gain = np.where(down, -d, np.where(up, d, 0.0))
        if state[0]:
            cand = np.flatnonzero(gain > 0.0)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0])
        else:
            j = int(np.argmax(gain))
            if not gain[j] > 0.0:
                return OPTIMAL
        direction = 1.0 if down[j] else -1.0

        col = M[:, j]
        a = direction * col
        k = basis
        dec = (a > tol_piv) & (lo[k] > -inf)
        inc = (a < -tol_piv) & (hi[k] < inf)
        rows = np.flatnonzero(dec | inc)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dec, (x[k] - lo[k]) / a, np.where(inc, (hi[k] - x[k]) / (-a), inf))
            t_relax = np.where(dec, (x[k] - lo[k] + tol_bound) / a,
                               np.where(inc, (hi[k] - x[k] + tol_bound) / (-a), inf))
        t = np.where(t < 0.0, 0.0, t)
        t_max = max(float(t_relax[rows].min()), 0.0) if rows.size else inf
        leave = -1
        t_min = inf
        if rows.size:
            cand = rows[t[rows] <= t_max]
            mag = np.abs(a[cand])
            if state[0]:
                ok = cand[mag >= BLAND_REL * mag.max()]
                leave = int(ok[np.argmin(basis[ok])])
            else:
                leave = int(cand[np.argmax(mag)])
            t_min = float(t[leave])
        flip = inf
        if lo[j] > -inf and hi[j] < inf:
            flip = hi[j] - lo[j]
        if flip == inf and t_min == inf:
            state[3] = j
            return UNBOUNDED

        if flip <= t_min:
            theta = flip
            step = direction * theta
            nz = np.flatnonzero(col)
            x[basis[nz]] -= step * col[nz]
            if direction > 0:
                x[j] = hi[j]
                status[j] = AT_UPPER
                at_low[j] = False
                at_up[j] = True
            else:
                x[j] = lo[j]
                status[j] = AT_LOWER
                at_low[j] = True
                at_up[j] = False
        else:
            theta = t_min
            step = direction * theta
            nz = np.flatnonzero(col)
            x[basis[nz]] -= step * col[nz]
            x[j] += step
            kk = basis[leave]
            if a[leave] > 0:
                x[kk] = lo[kk]
                st = FIXED if lo[kk] == hi[kk] else AT_LOWER
            else:
                x[kk] = hi[kk]
                st = FIXED if lo[kk] == hi[kk] else AT_UPPER
            status[kk] = st
            at_low[kk] = st == AT_LOWER
            at_up[kk] = st == AT_UPPER
            _pivot(M, d, leave, j)
            basis[leave] = j
            status[j] = BASIC
            at_low[j] = False
            at_up[j] = False

        if theta <= 1e-12:
            state[1] += 1
            if state[1] >= bland_after:
                state[0] = 1
        else:
            state[1] = 0
            state[0] = 0
        state[2] += 1
        done += 1
    return ITER_LIMIT


def _pivot(M, d, r, j):
    piv = M[r, j]
    row = M[r, :] / piv
    row[j] = 1.0
    M[r, :] = row
    cols = np.flatnonzero(row)
    rows = np.flatnonzero(M[:, j])
    rows = rows[rows != r]
    if rows.size:
        f = M[rows, j]
        sub = M[np.ix_(rows, cols)]
        sub -= f[:, None] * row[cols][None, :]
        M[np.ix_(rows, cols)] = sub
        M[rows, j] = 0.0
    dj = d[j]
    if dj != 0.0:
        d[cols] -= dj * row[cols]
        d[j] = 0.0


def joint_control(load, signal, capacity, threshold, window_steps,
                  step_seconds, p_max, energy, soc_min, soc_max, eta_c, eta_d, soc_ini,
                  b_out, soc_out):
    """Threshold real-time controller over one horizon.

    Each step tracks ``capacity * r``; while the running average of the net
    load in the current demand window exceeds ``threshold`` the excess is
    added to the discharge. The request is then clipped to the power rating
    and the SoC limits. ``soc_out`` has one more entry than ``b_out``.
    """
    n = load.shape[0]
    h = step_seconds / 3600.0
    soc = soc_ini
    soc_out[0] = soc
    acc = 0.0
    k = 0
    for t in range(n):
        if k == window_steps:
            k = 0
            acc = 0.0
        b = capacity * signal[t]
        if k > 0:
            u = acc / k
            if u > threshold:
                b += u - threshold
        if b >= 0.0:
            lim = eta_d * (soc - soc_min) * energy / h
            b = min(b, p_max)
            b = min(b, lim)
            b = max(b, 0.0)
            soc = soc - b / eta_d * h / energy
        else:
            lim = (soc - soc_max) * energy / (eta_c * h)
            b = max(b, -p_max)
            b = max(b, lim)
            b = min(b, 0.0)
            soc = soc - b * eta_c * h / energy
        b_out[t] = b
        soc_out[t + 1] = soc
        acc += load[t] - b
        k += 1
    return soc
