"""Part segmentations from side information: keypoint Voronoi cells or a
figure-ground mask."""

from __future__ import annotations

import numpy as np

from .types import KeypointAnnotation, PartSegmentation

MODES = ("voronoi_keypoints", "figure_ground")


def oracle_segmentation(ann: KeypointAnnotation, mode: str) -> PartSegmentation:
    """Build a segmentation from annotations.

    ``voronoi_keypoints``: every foreground pixel takes the index of its
    nearest visible keypoint (Euclidean distance, ties to the lowest
    index); all background pixels share one dedicated label ``n_visible``,
    so ``k = n_visible + 1``. ``figure_ground``: the mask itself, k = 2.
    """
    if ann.foreground_mask is None:
        raise ValueError("annotation has no foreground mask")
    mask = ann.foreground_mask
    h, w = mask.shape

    if mode == "figure_ground":
        return PartSegmentation(labels=mask.astype(np.int32), k=2)

    if mode != "voronoi_keypoints":
        raise ValueError(f"unknown oracle mode {mode!r}; expected one of {MODES}")

    visible = ann.visible_points
    if not visible:
        raise ValueError("voronoi mode requires at least one visible keypoint")
    if not mask.any():
        raise ValueError("voronoi mode requires a non-empty foreground")

    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.array([[p.x, p.y] for p in visible], dtype=np.float64)
    d2 = (xs[..., None] - pts[:, 0]) ** 2 + (ys[..., None] - pts[:, 1]) ** 2
    nearest = np.argmin(d2, axis=-1)

    labels = np.full((h, w), len(visible), dtype=np.int32)
    labels[mask] = nearest[mask]
    return PartSegmentation(labels=labels, k=len(visible) + 1)
