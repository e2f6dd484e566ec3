# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics match ``_kernels_py`` exactly; keep in sync."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()

cdef enum:
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2
    FREE = 3
    FIXED = 4
    C_OPTIMAL = 0
    C_UNBOUNDED = 1
    C_ITER_LIMIT = 2

OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2

BACKEND = "cython"

# leaving-row magnitude floor under Bland's rule, relative to the largest candidate pivot
cdef double BLAND_REL = 1e-3


cdef void _pivot(double[:, ::1] M, double[::1] d, Py_ssize_t r, Py_ssize_t j,
                 Py_ssize_t[::1] cols) noexcept nogil:
    cdef Py_ssize_t m = M.shape[0], n = M.shape[1]
    cdef Py_ssize_t i, c, q, nc = 0
    cdef double piv = M[r, j], f, dj
    for c in range(n):
        M[r, c] = M[r, c] / piv
    M[r, j] = 1.0
    for c in range(n):
        if M[r, c] != 0.0:
            cols[nc] = c
            nc += 1
    for i in range(m):
        if i == r:
            continue
        f = M[i, j]
        if f == 0.0:
            continue
        for q in range(nc):
            c = cols[q]
            M[i, c] = M[i, c] - f * M[r, c]
        M[i, j] = 0.0
    dj = d[j]
    if dj != 0.0:
        for q in range(nc):
            c = cols[q]
            d[c] = d[c] - dj * M[r, c]
        d[j] = 0.0


def iterate(double[:, ::1] M, double[::1] x, double[::1] d, cnp.int64_t[::1] basis,
            cnp.int8_t[::1] status, double[::1] lo, double[::1] hi, long max_iter,
            double tol_piv, double tol_bound, double tol_opt, long bland_after,
            cnp.int64_t[::1] state):
    cdef Py_ssize_t m = M.shape[0], n = M.shape[1]
    cdef Py_ssize_t i, j, k, leave, c
    cdef long done = 0
    cdef int s
    cdef double dj, g, best, direction, a, t, t_min, t_max, flip, theta, step, best_abs
    cdef cnp.int64_t best_basis
    cdef Py_ssize_t[::1] cols = np.empty(n, dtype=np.intp)
    cdef double[::1] tv = np.empty(m, dtype=np.float64)
    cdef bint bland
    cdef int code = C_ITER_LIMIT

    with nogil:
        while done < max_iter:
            bland = state[0] != 0
            j = -1
            best = 0.0
            direction = 0.0
            for c in range(n):
                s = status[c]
                if s == BASIC or s == FIXED:
                    continue
                dj = d[c]
                g = 0.0
                if (s == AT_LOWER or s == FREE) and dj < -tol_opt:
                    g = -dj
                elif (s == AT_UPPER or s == FREE) and dj > tol_opt:
                    g = dj
                if g > 0.0:
                    if bland:
                        j = c
                        break
                    if g > best:
                        best = g
                        j = c
            if j < 0:
                code = C_OPTIMAL
                break
            s = status[j]
            if (s == AT_LOWER or s == FREE) and d[j] < -tol_opt:
                direction = 1.0
            else:
                direction = -1.0

            # Harris pass 1: step bound with relaxed bounds
            t_max = INFINITY
            for i in range(m):
                a = direction * M[i, j]
                k = basis[i]
                t = INFINITY
                if a > tol_piv and lo[k] > -INFINITY:
                    tv[i] = (x[k] - lo[k]) / a
                    t = (x[k] - lo[k] + tol_bound) / a
                elif a < -tol_piv and hi[k] < INFINITY:
                    tv[i] = (hi[k] - x[k]) / (-a)
                    t = (hi[k] - x[k] + tol_bound) / (-a)
                else:
                    tv[i] = INFINITY
                if tv[i] < 0.0:
                    tv[i] = 0.0
                if t < t_max:
                    t_max = t
            if t_max < 0.0:
                t_max = 0.0
            # pass 2: largest pivot among rows blocking within the bound
            leave = -1
            best_abs = -1.0
            for i in range(m):
                if tv[i] < INFINITY and tv[i] <= t_max:
                    a = fabs(M[i, j])
                    if a > best_abs:
                        best_abs = a
                        leave = i
            if bland and leave >= 0:
                leave = -1
                best_basis = 0
                for i in range(m):
                    if tv[i] < INFINITY and tv[i] <= t_max and fabs(M[i, j]) >= BLAND_REL * best_abs:
                        if leave < 0 or basis[i] < best_basis:
                            leave = i
                            best_basis = basis[i]
            t_min = INFINITY
            if leave >= 0:
                t_min = tv[leave]
            flip = INFINITY
            if lo[j] > -INFINITY and hi[j] < INFINITY:
                flip = hi[j] - lo[j]
            if flip == INFINITY and t_min == INFINITY:
                state[3] = j
                code = C_UNBOUNDED
                break

            if flip <= t_min:
                theta = flip
                step = direction * theta
                for i in range(m):
                    if M[i, j] != 0.0:
                        k = basis[i]
                        x[k] = x[k] - step * M[i, j]
                if direction > 0:
                    x[j] = hi[j]
                    status[j] = AT_UPPER
                else:
                    x[j] = lo[j]
                    status[j] = AT_LOWER
            else:
                theta = t_min
                step = direction * theta
                for i in range(m):
                    if M[i, j] != 0.0:
                        k = basis[i]
                        x[k] = x[k] - step * M[i, j]
                x[j] = x[j] + step
                k = basis[leave]
                if direction * M[leave, j] > 0:
                    x[k] = lo[k]
                    status[k] = FIXED if lo[k] == hi[k] else AT_LOWER
                else:
                    x[k] = hi[k]
                    status[k] = FIXED if lo[k] == hi[k] else AT_UPPER
                _pivot(M, d, leave, j, cols)
                basis[leave] = j
                status[j] = BASIC

            if theta <= 1e-12:
                state[1] += 1
                if state[1] >= bland_after:
                    state[0] = 1
            else:
                state[1] = 0
                state[0] = 0
            state[2] += 1
            done += 1
    return code


def joint_control(const double[::1] load, const double[::1] signal, double capacity,
                  double threshold, long window_steps, double step_seconds, double p_max,
                  double energy, double soc_min, double soc_max, double eta_c, double eta_d,
                  double soc_ini, double[::1] b_out, double[::1] soc_out):
    cdef Py_ssize_t n = load.shape[0], t
    cdef double h = step_seconds / 3600.0
    cdef double soc = soc_ini, acc = 0.0, b, u, lim
    cdef long k = 0
    soc_out[0] = soc
    with nogil:
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
                if b > p_max:
                    b = p_max
                if b > lim:
                    b = lim
                if b < 0.0:
                    b = 0.0
                soc = soc - b / eta_d * h / energy
            else:
                lim = (soc - soc_max) * energy / (eta_c * h)
                if b < -p_max:
                    b = -p_max
                if b < lim:
                    b = lim
                if b > 0.0:
                    b = 0.0
                soc = soc - b * eta_c * h / energy
            b_out[t] = b
            soc_out[t + 1] = soc
            acc += load[t] - b
            k += 1
    return soc
