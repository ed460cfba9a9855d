# cython: language_level=3
"""Compiled kernels: Lloyd k-means loop and graph-based segmentation.

Mirrors ``pure.py`` exactly (tie-breaking, empty-cluster reseeding, union
order); the BLAS cross-term in the assignment step comes from scipy's
exported cython_blas so the distance arithmetic matches the numpy path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "compiled"


cdef void _gemm_xct(double[:, ::1] x, double[:, ::1] c, double[:, ::1] out) noexcept nogil:
    # out[n, k] = x[n, d] @ c[k, d].T via column-major BLAS on the
    # row-major buffers (compute out^T = c @ x^T in column-major view).
    cdef int m = c.shape[0]
    cdef int n = x.shape[0]
    cdef int kdim = x.shape[1]
    cdef double alpha = 1.0, beta = 0.0
    dgemm(b"T", b"N", &m, &n, &kdim, &alpha, &c[0, 0], &kdim,
          &x[0, 0], &kdim, &beta, &out[0, 0], &m)


def lloyd(x_in, centroids, int max_iters=500):
    """See ``particle._kernels.pure.lloyd`` for the contract."""
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, ::1] c = np.array(centroids, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t k = c.shape[0]

    x_sq_arr = np.einsum("ij,ij->i", np.asarray(x), np.asarray(x))
    cdef double[::1] x_sq = np.ascontiguousarray(x_sq_arr, dtype=np.float64)
    cdef double[::1] c_sq = np.empty(k, dtype=np.float64)
    cdef double[:, ::1] cross = np.empty((n, k), dtype=np.float64)
    cdef int[::1] labels = np.empty(n, dtype=np.int32)
    cdef int[::1] new_labels = np.empty(n, dtype=np.int32)
    cdef double[::1] dists = np.empty(n, dtype=np.float64)
    cdef double[::1] avail = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] sums = np.empty((k, d), dtype=np.float64)
    cdef double[::1] counts = np.empty(k, dtype=np.float64)
    cdef double[::1] trace = np.empty(max_iters + 1, dtype=np.float64)

    cdef Py_ssize_t i, j, p, best, n_changed
    cdef double s, dd, best_d, inertia
    cdef int n_iter = 0, it

    with nogil:
        _assign(x, c, x_sq, c_sq, cross, labels, dists)
    trace[0] = _total(dists)

    for it in range(max_iters):
        with nogil:
            _update(x, c, labels, dists, avail, sums, counts)
            _assign(x, c, x_sq, c_sq, cross, new_labels, dists)
            n_changed = 0
            for i in range(n):
                if new_labels[i] != labels[i]:
                    n_changed += 1
                labels[i] = new_labels[i]
        n_iter = it + 1
        trace[n_iter] = _total(dists)
        if n_changed == 0:
            break

    inertia = trace[n_iter]
    return (
        np.asarray(labels),
        np.asarray(c),
        inertia,
        n_iter,
        np.asarray(trace)[: n_iter + 1].copy(),
    )


cdef double _total(double[::1] v) noexcept:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(v.shape[0]):
        s += v[i]
    return s


cdef void _assign(double[:, ::1] x, double[:, ::1] c, double[::1] x_sq,
                  double[::1] c_sq, double[:, ::1] cross,
                  int[::1] labels, double[::1] dists) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t k = c.shape[0]
    cdef Py_ssize_t i, j, best
    cdef double s, dd, best_d
    for j in range(k):
        s = 0.0
        for i in range(d):
            s += c[j, i] * c[j, i]
        c_sq[j] = s
    _gemm_xct(x, c, cross)
    for i in range(n):
        best = 0
        best_d = x_sq[i] - 2.0 * cross[i, 0] + c_sq[0]
        for j in range(1, k):
            dd = x_sq[i] - 2.0 * cross[i, j] + c_sq[j]
            if dd < best_d:
                best_d = dd
                best = j
        labels[i] = <int>best
        dists[i] = best_d if best_d > 0.0 else 0.0


cdef void _update(double[:, ::1] x, double[:, ::1] c, int[::1] labels,
                  double[::1] dists, double[::1] avail,
                  double[:, ::1] sums, double[::1] counts) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t k = c.shape[0]
    cdef Py_ssize_t i, j, p, far
    cdef double far_d
    for j in range(k):
        counts[j] = 0.0
        for i in range(d):
            sums[j, i] = 0.0
    for i in range(n):
        j = labels[i]
        counts[j] += 1.0
        for p in range(d):
            sums[j, p] += x[i, p]
    for i in range(n):
        avail[i] = dists[i]
    for j in range(k):
        if counts[j] > 0.0:
            for p in range(d):
                c[j, p] = sums[j, p] / counts[j]
        else:
            far = 0
            far_d = avail[0]
            for i in range(1, n):
                if avail[i] > far_d:
                    far_d = avail[i]
                    far = i
            for p in range(d):
                c[j, p] = x[far, p]
            avail[far] = -INFINITY


cdef int _find(int[::1] parent, int v) noexcept nogil:
    cdef int root = v
    cdef int nxt
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


cdef int _union(int[::1] parent, int[::1] rank, long[::1] size, int a, int b) noexcept nogil:
    cdef int tmp
    if rank[a] < rank[b]:
        tmp = a
        a = b
        b = tmp
    parent[b] = a
    size[a] += size[b]
    if rank[a] == rank[b]:
        rank[a] += 1
    return a


def fh_segment_grid(Py_ssize_t n_vertices, src_in, dst_in, weights_in,
                    double scale, long min_size):
    """See ``particle._kernels.pure.fh_segment_grid`` for the contract."""
    cdef int[::1] src = np.ascontiguousarray(src_in, dtype=np.int32)
    cdef int[::1] dst = np.ascontiguousarray(dst_in, dtype=np.int32)
    cdef double[::1] weights = np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef Py_ssize_t m = weights.shape[0]

    cdef int[::1] parent = np.arange(n_vertices, dtype=np.int32)
    cdef int[::1] rank = np.zeros(n_vertices, dtype=np.int32)
    cdef long[::1] size = np.ones(n_vertices, dtype=np.int64)
    cdef double[::1] thresh = np.full(n_vertices, scale, dtype=np.float64)
    cdef int[::1] labels = np.empty(n_vertices, dtype=np.int32)
    cdef int[::1] remap = np.full(n_vertices, -1, dtype=np.int32)

    cdef Py_ssize_t e, v
    cdef int a, b, root
    cdef int next_label = 0

    with nogil:
        for e in range(m):
            a = _find(parent, src[e])
            b = _find(parent, dst[e])
            if a != b and weights[e] <= thresh[a] and weights[e] <= thresh[b]:
                root = _union(parent, rank, size, a, b)
                thresh[root] = weights[e] + scale / size[root]
        for e in range(m):
            a = _find(parent, src[e])
            b = _find(parent, dst[e])
            if a != b and (size[a] < min_size or size[b] < min_size):
                _union(parent, rank, size, a, b)
        for v in range(n_vertices):
            root = _find(parent, <int>v)
            if remap[root] < 0:
                remap[root] = next_label
                next_label += 1
            labels[v] = remap[root]
    return np.asarray(labels)
