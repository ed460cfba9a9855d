"""Data types for per-image part segmentations and oracle annotations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PartSegmentation:
    """An integer part-label map plus the cluster state behind it.

    ``labels`` is an ``[H, W]`` int map with values in ``[0, k)``;
    ``centroids`` (feature-space cluster means, ``[k, d]``) and ``inertia``
    are retained only for k-means-produced segmentations so later
    iterations can warm-start from the partition.
    """

    labels: np.ndarray
    k: int
    centroids: np.ndarray | None = None
    inertia: float = 0.0

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise ValueError(f"labels must be 2-d, got shape {self.labels.shape}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ValueError(
                f"label values must lie in [0, {self.k}), "
                f"got range [{self.labels.min()}, {self.labels.max()}]"
            )
        if self.inertia < 0.0:
            raise ValueError(f"inertia must be >= 0, got {self.inertia}")
        if self.centroids is not None:
            self.centroids = np.asarray(self.centroids)
            if self.centroids.shape[0] != self.k:
                raise ValueError(
                    f"centroids has {self.centroids.shape[0]} rows, expected k={self.k}"
                )

    @property
    def present_ids(self) -> np.ndarray:
        return np.unique(self.labels)


@dataclass
class Keypoint:
    name: str
    x: float
    y: float
    visible: bool = True


@dataclass
class KeypointAnnotation:
    """Named keypoints plus a figure-ground mask for one image."""

    points: list[Keypoint] = field(default_factory=list)
    foreground_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.foreground_mask is not None:
            self.foreground_mask = np.asarray(self.foreground_mask).astype(bool)
            h, w = self.foreground_mask.shape
            for p in self.points:
                if p.visible and not (0 <= p.x < w and 0 <= p.y < h):
                    raise ValueError(
                        f"visible keypoint {p.name!r} at ({p.x}, {p.y}) lies "
                        f"outside the {w}x{h} image"
                    )

    @property
    def visible_points(self) -> list[Keypoint]:
        return [p for p in self.points if p.visible]
