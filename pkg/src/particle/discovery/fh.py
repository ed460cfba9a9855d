"""Graph-based color/texture segmentation (Felzenszwalb-Huttenlocher style).

Edges connect 8-neighbors on the pixel grid, weighted by Euclidean RGB
distance after Gaussian pre-smoothing. The pixel values are put on a 0-255
scale internally so the conventional ``scale``/``min_size`` parameter
ranges keep their usual meaning for float inputs in [0, 1].
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .. import _kernels
from .types import PartSegmentation


def _grid_edges(h, w):
    idx = np.arange(h * w, dtype=np.int32).reshape(h, w)
    pairs = []
    # right, down, down-right, down-left
    pairs.append((idx[:, :-1], idx[:, 1:]))
    pairs.append((idx[:-1, :], idx[1:, :]))
    pairs.append((idx[:-1, :-1], idx[1:, 1:]))
    pairs.append((idx[:-1, 1:], idx[1:, :-1]))
    src = np.concatenate([a.reshape(-1) for a, _ in pairs])
    dst = np.concatenate([b.reshape(-1) for _, b in pairs])
    return src, dst


def fh_segmentation(
    image: np.ndarray,
    scale: float,
    min_size: int,
    sigma: float = 0.8,
) -> PartSegmentation:
    """Segment an ``[H, W, 3]`` image; labels are dense, k = #components."""
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    if min_size < 1:
        raise ValueError(f"min_size must be >= 1, got {min_size}")
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected [H, W, 3] image, got shape {img.shape}")
    img = img.astype(np.float64)
    if img.max() <= 1.0 + 1e-6:
        img = img * 255.0

    h, w = img.shape[:2]
    smooth = np.stack(
        [gaussian_filter(img[:, :, c], sigma=sigma, mode="nearest") for c in range(3)],
        axis=-1,
    )
    src, dst = _grid_edges(h, w)
    flat = smooth.reshape(h * w, 3)
    weights = np.sqrt(np.sum((flat[src] - flat[dst]) ** 2, axis=1))
    order = np.argsort(weights, kind="stable")

    labels = _kernels.fh_segment_grid(
        h * w, src[order], dst[order], weights[order], float(scale), int(min_size)
    )
    labels = labels.reshape(h, w)
    return PartSegmentation(labels=labels, k=int(labels.max()) + 1)
