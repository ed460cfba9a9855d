"""Per-image k-means part discovery with warm starts across iterations."""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .types import PartSegmentation


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of k starting points."""
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = x[first]
    closest = np.sum((x - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # All remaining points coincide with a chosen centroid.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[j] = x[idx]
        closest = np.minimum(closest, np.sum((x - centroids[j]) ** 2, axis=1))
    return centroids


def _check_enough_distinct(x, k):
    """Raise if fewer than ``k`` distinct feature vectors exist.

    A seeded random projection gives a cheap lower bound on the distinct
    count (projection collisions can only undercount); the exact row-wise
    unique runs only when that bound is below k.
    """
    if k > x.shape[0]:
        raise ValueError(f"k={k} exceeds the number of feature vectors ({x.shape[0]})")
    proj = x @ np.random.default_rng(0).standard_normal(x.shape[1])
    if np.unique(proj).shape[0] >= k:
        return
    n_distinct = np.unique(x, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(
            f"k={k} exceeds the number of distinct feature vectors ({n_distinct})"
        )


def _warm_start_centroids(x, labels_flat, k):
    """Cluster means under the *current* feature space; empty labels are
    reseeded at the point farthest from its own cluster mean."""
    counts = np.bincount(labels_flat, minlength=k).astype(np.float64)
    onehot = np.zeros((k, x.shape[0]), dtype=np.float64)
    onehot[labels_flat, np.arange(x.shape[0])] = 1.0
    sums = onehot @ x
    centroids = np.zeros((k, x.shape[1]), dtype=np.float64)
    nonempty = counts > 0
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    if not nonempty.all():
        dists = np.sum((x - centroids[labels_flat]) ** 2, axis=1)
        for j in np.flatnonzero(~nonempty):
            p = int(np.argmax(dists))
            centroids[j] = x[p]
            dists[p] = -np.inf
    return centroids


def part_discovery(
    features,
    k: int,
    warm_start: PartSegmentation | None = None,
    max_iters: int = 500,
    seed: int = 0,
    init: str = "kmeans++",
    debug: bool = False,
) -> PartSegmentation:
    """Cluster the pixel features of one image into ``k`` parts.

    ``features`` is an ``[H, W, d]`` array (or a FeatureMap-like object with
    a ``values`` attribute). Initialization is k-means++ with the given seed
    unless ``warm_start`` provides a previous partition, in which case
    centroids are recomputed from that partition under the new features.
    """
    values = getattr(features, "values", features)
    values = np.asarray(values)
    if values.ndim != 3:
        raise ValueError(f"features must be [H, W, d], got shape {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("features contain non-finite values")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    h, w, d = values.shape
    x = np.ascontiguousarray(values.reshape(h * w, d), dtype=np.float64)

    _check_enough_distinct(x, k)

    if warm_start is not None:
        warm_labels = np.asarray(getattr(warm_start, "labels", warm_start))
        warm_k = getattr(warm_start, "k", None)
        if warm_labels.shape != (h, w):
            raise ValueError(
                f"warm start shape {warm_labels.shape} does not match "
                f"feature grid {(h, w)}"
            )
        if warm_k is not None and warm_k != k:
            raise ValueError(f"warm start has k={warm_k}, expected k={k}")
        if warm_labels.min() < 0 or warm_labels.max() >= k:
            raise ValueError(
                f"warm-start labels outside [0, {k}): "
                f"[{warm_labels.min()}, {warm_labels.max()}]"
            )
        centroids = _warm_start_centroids(
            x, warm_labels.reshape(-1).astype(np.int64), k
        )
    elif init == "kmeans++":
        centroids = kmeans_pp_init(x, k, np.random.default_rng(seed))
    elif init == "random":
        rng = np.random.default_rng(seed)
        centroids = x[rng.choice(h * w, size=k, replace=False)].astype(np.float64)
    else:
        raise ValueError(f"unknown init {init!r}")

    labels, centroids, inertia, _, trace = _kernels.lloyd(x, centroids, max_iters)
    if debug:
        drop = np.diff(trace)
        tol = 1e-9 * max(1.0, trace[0])
        if np.any(drop > tol):
            raise AssertionError(f"inertia increased during Lloyd iterations: {trace}")
    return PartSegmentation(
        labels=labels.reshape(h, w).astype(np.int32),
        k=k,
        centroids=centroids,
        inertia=float(inertia),
    )
