"""Frozen-feature extraction for the probing protocol."""

from __future__ import annotations

import numpy as np
import torch

from ..backbones.encode import to_model_input


def image_features(model, image) -> np.ndarray:
    """One vector per image via the backbone's global_features: spatial
    average of the final pre-pooling map for convolutional backbones, mean
    over class plus patch tokens for transformers."""
    x = to_model_input(image)
    was_training = model.training
    model.eval()
    try:
        with torch.inference_mode():
            vec = model.global_features(x)
    finally:
        model.train(was_training)
    return vec.squeeze(0).numpy().astype(np.float64)


def dataset_features(model, images) -> np.ndarray:
    rows = [image_features(model, img) for img in images]
    return np.stack(rows, axis=0)
