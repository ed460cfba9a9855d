"""Single-image encoding: run a backbone, collect tap activations, and wrap
them as feature maps ready for hypercolumn assembly or clustering."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import torch

from ..errors import ConfigError
from .types import EncoderOutput, FeatureMap
from .vit import TinyViT

# Inputs are scaled from [0, 1] to zero-centered before entering the network.
IMAGE_MEAN = 0.5
IMAGE_STD = 0.5


def to_model_input(image) -> torch.Tensor:
    """[H, W, 3] array (uint8 or float in [0, 1]) -> normalized [1, 3, H, W]."""
    if isinstance(image, torch.Tensor):
        t = image.detach().float()
        if t.ndim == 3 and t.shape[0] == 3:
            t = t.unsqueeze(0)
        elif t.ndim == 3 and t.shape[-1] == 3:
            t = t.permute(2, 0, 1).unsqueeze(0)
        elif t.ndim != 4:
            raise ValueError(f"cannot interpret tensor of shape {tuple(t.shape)} as an image")
    else:
        arr = np.asarray(image)
        if arr.ndim != 3 or arr.shape[-1] != 3:
            raise ValueError(f"expected [H, W, 3] image, got shape {arr.shape}")
        if arr.dtype == np.uint8:
            arr = arr.astype(np.float32) / 255.0
        t = torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))
        t = t.permute(2, 0, 1).unsqueeze(0)
    return (t - IMAGE_MEAN) / IMAGE_STD


def normalize_image_batch(views: torch.Tensor) -> torch.Tensor:
    """Normalize a [B, 3, H, W] batch of [0, 1] images in the same way."""
    return (views - IMAGE_MEAN) / IMAGE_STD


def _map_from_tensor(t: torch.Tensor, layer_id: str,
                     source_resolution: tuple) -> FeatureMap:
    arr = t.detach().squeeze(0).permute(1, 2, 0).contiguous().numpy()
    return FeatureMap(
        values=np.ascontiguousarray(arr, dtype=np.float32),
        layer_id=layer_id,
        source_resolution=source_resolution,
    )


def resolve_tap(model, name: str) -> str:
    """Map a tap alias to the model's canonical tap name."""
    aliases = getattr(model, "TAP_ALIASES", None) or getattr(type(model), "TAP_ALIASES", {})
    return aliases.get(name, name)


def encode(model, image, taps: Optional[Sequence[str]] = None) -> EncoderOutput:
    """Run the frozen backbone on one image.

    Returns the final feature map, the requested intermediate taps, and the
    class token when the architecture has one. Unknown tap names raise
    ConfigError listing what the model offers.
    """
    x = to_model_input(image)
    source = (int(x.shape[-2]), int(x.shape[-1]))
    was_training = model.training
    model.eval()
    try:
        with torch.inference_mode():
            final, tap_maps, cls_token = model.forward_taps(x)
    finally:
        model.train(was_training)

    available = tuple(tap_maps.keys())
    requested = {}
    for name in taps or ():
        canonical = resolve_tap(model, name)
        if canonical not in tap_maps:
            raise ConfigError(
                f"unknown tap {name!r}; this backbone provides {sorted(available)}"
            )
        requested[name] = _map_from_tensor(tap_maps[canonical], name, source)

    cls_arr = None
    if cls_token is not None:
        cls_arr = cls_token.detach().squeeze(0).numpy().astype(np.float32)
    return EncoderOutput(
        final_map=_map_from_tensor(final, "final", source),
        taps=requested,
        cls_token=cls_arr,
    )


def vit_key_features(model: TinyViT, image, layer: int = -1) -> FeatureMap:
    """Per-patch attention-key features of one transformer layer, unit norm."""
    if not isinstance(model, TinyViT):
        raise ConfigError("key features are only defined for the transformer backbone")
    x = to_model_input(image)
    source = (int(x.shape[-2]), int(x.shape[-1]))
    was_training = model.training
    model.eval()
    try:
        with torch.inference_mode():
            keys = model.key_maps(x, layer=layer)
    finally:
        model.train(was_training)
    idx = layer if layer >= 0 else model.depth + layer
    return _map_from_tensor(keys, f"keys{idx}", source)
