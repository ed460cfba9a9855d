"""Hypercolumn assembly: bilinear resampling + per-layer L2 normalization +
channel concatenation."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ConfigError
from .types import FeatureMap, HypercolumnSpec


def resample_bilinear(values: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of an [H, W, K] array (align-corners-false)."""
    h, w, _ = values.shape
    if (h, w) == tuple(target):
        return np.asarray(values, dtype=np.float32)
    t = torch.from_numpy(np.ascontiguousarray(values, dtype=np.float32))
    t = t.permute(2, 0, 1).unsqueeze(0)
    t = F.interpolate(t, size=tuple(target), mode="bilinear", align_corners=False)
    return t.squeeze(0).permute(1, 2, 0).numpy()


def l2_normalize_pixels(values: np.ndarray) -> np.ndarray:
    """Unit L2 norm per pixel vector; all-zero vectors stay zero."""
    norms = np.linalg.norm(values, axis=-1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return (values / safe).astype(np.float32)


def hypercolumn(taps: dict[str, FeatureMap], spec: HypercolumnSpec) -> FeatureMap:
    """Stack the listed taps at the target resolution, in spec order.

    Each layer is bilinearly resampled first and then (in paper mode)
    normalized so every pixel's per-layer slice has unit L2 norm.
    """
    slices = []
    source_resolution = None
    for layer_id in spec.layer_ids:
        if layer_id not in taps:
            raise ConfigError(f"tap {layer_id!r} missing from encoder output")
        fm = taps[layer_id]
        if fm.values.size == 0:
            raise ValueError(f"tap {layer_id!r} is zero-sized")
        if source_resolution is None:
            source_resolution = fm.source_resolution
        resampled = resample_bilinear(fm.values, spec.target_resolution)
        if spec.normalize_per_layer:
            resampled = l2_normalize_pixels(resampled)
        slices.append(resampled)
    stacked = np.concatenate(slices, axis=-1)
    return FeatureMap(
        values=stacked,
        layer_id="hypercolumn[" + ",".join(spec.layer_ids) + "]",
        source_resolution=source_resolution,
    )
