# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled variants of the hot kernels; see _pykernels for the contract."""

from libc.math cimport exp, INFINITY

import numpy as np


def pairwise_sqdist(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            o[i, j] = acc
    return out


def lsap_solve(const double[:, ::1] cost):
    cdef Py_ssize_t n = cost.shape[0], m = cost.shape[1]
    if n > m:
        raise ValueError("cost matrix needs at least as many columns as rows")
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(m + 1)
    row_arr = np.zeros(m + 1, dtype=np.int64)
    way_arr = np.zeros(m + 1, dtype=np.int64)
    minv_arr = np.empty(m + 1)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef long long[::1] assigned_row = row_arr, way = way_arr
    cdef unsigned char[::1] used = used_arr
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    for i in range(1, n + 1):
        assigned_row[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = assigned_row[j0]
            delta = INFINITY
            j1 = -1
            for j in range(1, m + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            if delta == INFINITY:
                raise ValueError(f"row {i - 1} has no feasible assignment")
            for j in range(m + 1):
                if used[j]:
                    u[assigned_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if assigned_row[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            assigned_row[j0] = assigned_row[j1]
            j0 = j1
    result = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] res = result
    for j in range(1, m + 1):
        if assigned_row[j] != 0:
            res[assigned_row[j] - 1] = j - 1
    return result


def ap_run(const double[:, ::1] s, double damping, int max_iter, int conv_iter):
    cdef Py_ssize_t n = s.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64), 0, True
    r_arr = np.zeros((n, n))
    a_arr = np.zeros((n, n))
    isex_arr = np.zeros(n, dtype=np.uint8)
    cdef double[:, ::1] r = r_arr, a = a_arr
    cdef unsigned char[::1] is_ex = isex_arr
    cdef Py_ssize_t i, k, top1, it
    cdef double max1, max2, val, colsum, rnew, anew, tmp
    cdef int stable = 0, niter = 0
    cdef bint converged = False, same, ex, any_ex
    for it in range(1, max_iter + 1):
        niter = it
        for i in range(n):
            # top two of a(i,:) + s(i,:)
            max1 = -INFINITY
            max2 = -INFINITY
            top1 = 0
            for k in range(n):
                val = a[i, k] + s[i, k]
                if val > max1:
                    max2 = max1
                    max1 = val
                    top1 = k
                elif val > max2:
                    max2 = val
            for k in range(n):
                rnew = s[i, k] - (max2 if k == top1 else max1)
                r[i, k] = (1.0 - damping) * rnew + damping * r[i, k]
        for k in range(n):
            colsum = 0.0
            for i in range(n):
                if i == k:
                    colsum += r[k, k]
                elif r[i, k] > 0.0:
                    colsum += r[i, k]
            for i in range(n):
                if i == k:
                    anew = colsum - r[k, k]
                else:
                    tmp = colsum - (r[i, k] if r[i, k] > 0.0 else 0.0)
                    anew = tmp if tmp < 0.0 else 0.0
                a[i, k] = (1.0 - damping) * anew + damping * a[i, k]
        same = True
        any_ex = False
        for k in range(n):
            ex = (a[k, k] + r[k, k]) > 0.0
            if ex:
                any_ex = True
            if ex != <bint>is_ex[k]:
                same = False
        if any_ex and same:
            stable += 1
            if stable >= conv_iter:
                converged = True
                break
        else:
            stable = 0
            for k in range(n):
                is_ex[k] = 1 if (a[k, k] + r[k, k]) > 0.0 else 0
    exemplars = np.nonzero(isex_arr)[0].astype(np.int64)
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(np.diag(a_arr) + np.diag(r_arr)))], dtype=np.int64)
        converged = False
    return exemplars, niter, converged


def mean_shift_run(const double[:, ::1] x, double bandwidth, double tol, int max_iter):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    y_arr = np.asarray(x).copy()
    new_arr = np.empty(d)
    active_arr = np.ones(n, dtype=np.uint8)
    cdef double[:, ::1] y = y_arr
    cdef double[::1] new = new_arr
    cdef unsigned char[::1] active = active_arr
    cdef double gamma = 1.0 / (2.0 * bandwidth * bandwidth)
    cdef Py_ssize_t i, j, k, it
    cdef double acc, diff, w, norm, shift2
    cdef bint any_active
    for it in range(max_iter):
        any_active = False
        for i in range(n):
            if not active[i]:
                continue
            any_active = True
            norm = 0.0
            for k in range(d):
                new[k] = 0.0
            for j in range(n):
                acc = 0.0
                for k in range(d):
                    diff = y[i, k] - x[j, k]
                    acc += diff * diff
                w = exp(-gamma * acc)
                norm += w
                for k in range(d):
                    new[k] += w * x[j, k]
            shift2 = 0.0
            if norm > 0.0:
                for k in range(d):
                    new[k] /= norm
                    diff = new[k] - y[i, k]
                    shift2 += diff * diff
                    y[i, k] = new[k]
            if shift2 <= tol * tol:
                active[i] = 0
        if not any_active:
            break
    return y_arr
