# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def perm_sum_apply(const cnp.int64_t[:, ::1] perms,
                   const double[::1] weights,
                   const double[:, :, ::1] x):
    cdef Py_ssize_t nt = perms.shape[0], d = perms.shape[1]
    cdef Py_ssize_t nl = x.shape[0], nr = x.shape[2]
    cdef Py_ssize_t t, l, i, r, src
    cdef double w
    out = np.zeros((nl, d, nr), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    for t in range(nt):
        w = weights[t]
        for l in range(nl):
            for i in range(d):
                src = perms[t, i]
                for r in range(nr):
                    o[l, i, r] += w * x[l, src, r]
    return out


def ks_sup_distance(const double[::1] xs, const double[::1] ys):
    cdef Py_ssize_t n = xs.shape[0], m = ys.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double v, diff, best = 0.0
    while i < n or j < m:
        if j >= m or (i < n and xs[i] <= ys[j]):
            v = xs[i]
        else:
            v = ys[j]
        while i < n and xs[i] <= v:
            i += 1
        while j < m and ys[j] <= v:
            j += 1
        diff = <double>i / n - <double>j / m
        if diff < 0:
            diff = -diff
        if diff > best:
            best = diff
    return best


def kron_power_sums(const double[:, :, ::1] samples,
                    const cnp.int64_t[:, ::1] rows,
                    const cnp.int64_t[:, ::1] cols,
                    chunk=None):
    cdef Py_ssize_t ns = samples.shape[0], k = rows.shape[0], m = rows.shape[1]
    cdef Py_ssize_t s, j, t
    cdef double v
    total = np.zeros(m, dtype=np.float64)
    total_sq = np.zeros(m, dtype=np.float64)
    cdef double[::1] tot = total, tsq = total_sq
    for s in range(ns):
        for j in range(m):
            v = samples[s, rows[0, j], cols[0, j]]
            for t in range(1, k):
                v *= samples[s, rows[t, j], cols[t, j]]
            tot[j] += v
            tsq[j] += v * v
    return total, total_sq
