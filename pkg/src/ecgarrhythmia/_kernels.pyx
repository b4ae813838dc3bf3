# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: entropy template matching and CART split search.

Must stay numerically identical to ``_fallback``; tests compare the two.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ctypedef cnp.intp_t intp


def approx_entropy(const double[::1] x, int m, double r):
    cdef Py_ssize_t n = x.shape[0]
    return _phi(x, n, m, r) - _phi(x, n, m + 1, r)


cdef double _phi(const double[::1] x, Py_ssize_t n, int m, double r) nogil:
    cdef Py_ssize_t n_t = n - m + 1
    cdef Py_ssize_t i, j, k
    cdef long count
    cdef double total = 0.0
    cdef bint ok
    for i in range(n_t):
        count = 0
        for j in range(n_t):
            ok = True
            for k in range(m):
                if fabs(x[i + k] - x[j + k]) > r:
                    ok = False
                    break
            if ok:
                count += 1
        total += log(<double>count / <double>n_t)
    return total / <double>n_t


def sample_entropy_counts(const double[::1] x, int m, double r):
    """Return (A, B): pairs matching at length m+1 and m, strict ``< r``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_t = n - m
    cdef Py_ssize_t i, j, k
    cdef long a = 0, b = 0
    cdef bint ok
    with nogil:
        for i in range(n_t):
            for j in range(i + 1, n_t):
                ok = True
                for k in range(m):
                    if fabs(x[i + k] - x[j + k]) >= r:
                        ok = False
                        break
                if ok:
                    b += 1
                    if fabs(x[i + m] - x[j + m]) < r:
                        a += 1
    return a, b


cdef struct Pair:
    double v
    intp y


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).v
    cdef double vb = (<Pair*>b).v
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


def best_split(const double[:, ::1] X, const intp[::1] y, const intp[::1] idx,
               const intp[::1] features, int n_try, int n_classes, int min_leaf):
    """Best Gini split of the rows ``idx``.

    Features are visited in the given order; features constant on the node do
    not count towards ``n_try``. Returns ``(feature, threshold, score)`` with
    ``score = sum(L_c^2)/n_L + sum(R_c^2)/n_R`` (larger is better), or
    ``(-1, nan, -inf)`` when no valid split exists.
    """
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t n_feat = features.shape[0]
    cdef Py_ssize_t fi, i, c
    cdef intp f, best_f = -1
    cdef int tried = 0
    cdef double best_score = -np.inf, best_thr = np.nan
    cdef double score, thr, sl, sr, lc, rc
    cdef Pair* pairs = <Pair*>malloc(n * sizeof(Pair))
    cdef long* total = <long*>malloc(n_classes * sizeof(long))
    cdef long* left = <long*>malloc(n_classes * sizeof(long))
    if pairs == NULL or total == NULL or left == NULL:
        free(pairs); free(total); free(left)
        raise MemoryError()
    with nogil:
        for c in range(n_classes):
            total[c] = 0
        for i in range(n):
            total[y[idx[i]]] += 1
        for fi in range(n_feat):
            if tried >= n_try:
                break
            f = features[fi]
            for i in range(n):
                pairs[i].v = X[idx[i], f]
                pairs[i].y = y[idx[i]]
            qsort(pairs, n, sizeof(Pair), _cmp_pair)
            if pairs[0].v == pairs[n - 1].v:
                continue
            tried += 1
            for c in range(n_classes):
                left[c] = 0
            for i in range(n - 1):
                left[pairs[i].y] += 1
                if pairs[i].v == pairs[i + 1].v:
                    continue
                if i + 1 < min_leaf or n - i - 1 < min_leaf:
                    continue
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    lc = <double>left[c]
                    rc = <double>(total[c] - left[c])
                    sl += lc * lc
                    sr += rc * rc
                score = sl / <double>(i + 1) + sr / <double>(n - i - 1)
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = (pairs[i].v + pairs[i + 1].v) / 2.0
                    if thr == pairs[i + 1].v:
                        thr = pairs[i].v
                    best_thr = thr
    free(pairs)
    free(total)
    free(left)
    return int(best_f), best_thr, best_score
