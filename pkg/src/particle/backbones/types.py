"""Feature-map containers used on the inference/discovery path."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FeatureMap:
    """A dense per-pixel representation ``[H', W', K]`` with provenance."""

    values: np.ndarray
    layer_id: str
    source_resolution: tuple[int, int]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 3:
            raise ValueError(f"feature map must be [H', W', K], got {self.values.shape}")
        h, w, k = self.values.shape
        if h < 1 or w < 1 or k < 1:
            raise ValueError(f"feature map has a zero-sized axis: {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError(f"feature map {self.layer_id!r} has non-finite values")

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass
class HypercolumnSpec:
    """Which taps to stack and the common resolution to resample them to."""

    layer_ids: tuple[str, ...]
    target_resolution: tuple[int, int]
    normalize_per_layer: bool = True

    def __post_init__(self):
        self.layer_ids = tuple(self.layer_ids)
        if not self.layer_ids:
            raise ValueError("layer_ids must be non-empty")
        if len(set(self.layer_ids)) != len(self.layer_ids):
            raise ValueError(f"duplicate layer ids in {self.layer_ids}")
        th, tw = self.target_resolution
        if th < 2 or tw < 2:
            raise ValueError(f"target_resolution must be >= (2, 2), got {(th, tw)}")
        self.target_resolution = (int(th), int(tw))


@dataclass
class EncoderOutput:
    """Spatial features from one forward pass: the pre-pooling final map,
    the requested intermediate taps, and (for ViTs) the class token."""

    final_map: FeatureMap
    taps: dict[str, FeatureMap] = field(default_factory=dict)
    cls_token: np.ndarray | None = None
