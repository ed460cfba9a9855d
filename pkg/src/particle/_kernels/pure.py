"""Pure numpy/python fallback implementations of the hot per-image kernels.

Semantics here are the reference: the compiled core in ``_core.pyx`` must
produce the same partitions for the same inputs (identical tie-breaking,
identical empty-cluster reseeding, identical union order).
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def _assign(x, x_sq, centroids):
    """Nearest-centroid assignment; ties go to the lowest centroid index."""
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    dd = x_sq[:, None] - 2.0 * (x @ centroids.T) + c_sq[None, :]
    labels = np.argmin(dd, axis=1).astype(np.int32)
    dists = np.maximum(dd[np.arange(x.shape[0]), labels], 0.0)
    return labels, dists


def _update(x, labels, k, centroids, dists):
    """Mean update; empty clusters are reseeded at the worst-fit point."""
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    onehot = np.zeros((k, x.shape[0]), dtype=np.float64)
    onehot[labels, np.arange(x.shape[0])] = 1.0
    sums = onehot @ x
    new_c = centroids.copy()
    nonempty = counts > 0
    new_c[nonempty] = sums[nonempty] / counts[nonempty, None]
    if not nonempty.all():
        avail = dists.copy()
        for j in np.flatnonzero(~nonempty):
            p = int(np.argmax(avail))
            new_c[j] = x[p]
            avail[p] = -np.inf
    return new_c


def lloyd(x, centroids, max_iters=500):
    """Lloyd's algorithm from explicit initial centroids.

    Each iteration recomputes centroids from the current labels, then
    reassigns; it stops when a full update+assign round changes no label,
    so the returned labels are always consistent with the returned
    centroids. Returns ``(labels, centroids, inertia, n_iter, trace)``
    where ``trace[t]`` is the inertia after the t-th assignment
    (``trace[0]`` is measured against the initial centroids).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.array(centroids, dtype=np.float64, copy=True)
    x_sq = np.einsum("ij,ij->i", x, x)
    labels, dists = _assign(x, x_sq, c)
    trace = [float(dists.sum())]
    n_iter = 0
    for _ in range(max_iters):
        c = _update(x, labels, c.shape[0], c, dists)
        new_labels, dists = _assign(x, x_sq, c)
        trace.append(float(dists.sum()))
        n_iter += 1
        changed = bool(np.any(new_labels != labels))
        labels = new_labels
        if not changed:
            break
    return labels, c, trace[-1], n_iter, np.asarray(trace)


def fh_segment_grid(n_vertices, src, dst, weights, scale, min_size):
    """Graph-based segmentation over pre-sorted edges (ascending weight).

    Runs the classic union-find merge with per-component threshold
    ``scale / |C|``, then merges components smaller than ``min_size``
    along the same edge order, and finally relabels components densely
    in order of first appearance (vertex 0, 1, 2, ...).
    """
    parent = list(range(n_vertices))
    rank = [0] * n_vertices
    size = [1] * n_vertices
    thresh = [float(scale)] * n_vertices
    src = [int(v) for v in src]
    dst = [int(v) for v in dst]
    weights = [float(w) for w in weights]

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(a, b):
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        if rank[a] == rank[b]:
            rank[a] += 1
        return a

    for e in range(len(weights)):
        a = find(src[e])
        b = find(dst[e])
        if a != b and weights[e] <= thresh[a] and weights[e] <= thresh[b]:
            root = union(a, b)
            thresh[root] = weights[e] + scale / size[root]

    for e in range(len(weights)):
        a = find(src[e])
        b = find(dst[e])
        if a != b and (size[a] < min_size or size[b] < min_size):
            union(a, b)

    labels = np.empty(n_vertices, dtype=np.int32)
    remap = {}
    for v in range(n_vertices):
        root = find(v)
        if root not in remap:
            remap[root] = len(remap)
        labels[v] = remap[root]
    return labels
