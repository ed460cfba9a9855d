"""Backbone construction from configuration."""

from __future__ import annotations

import torch

from ..errors import ConfigError
from .cnn import TinyCNN
from .vit import TinyViT


def build_encoder(model_cfg, image_side: int = 64, seed: int = 0):
    """Instantiate the configured backbone with a seeded initialization.

    `model_cfg` needs an `arch` attribute ("cnn" or "vit") plus the
    architecture's size fields; see `particle.config.ModelConfig`.
    """
    arch = getattr(model_cfg, "arch", None)
    torch.manual_seed(seed)
    if arch == "cnn":
        width = int(getattr(model_cfg, "cnn_width", 16))
        blocks = int(getattr(model_cfg, "blocks_per_stage", 1))
        return TinyCNN(
            widths=(width, width * 2, width * 4, width * 8),
            blocks_per_stage=blocks,
        )
    if arch == "vit":
        return TinyViT(
            image_side=int(image_side),
            patch_size=int(getattr(model_cfg, "vit_patch", 8)),
            dim=int(getattr(model_cfg, "vit_dim", 64)),
            depth=int(getattr(model_cfg, "vit_depth", 3)),
            heads=int(getattr(model_cfg, "vit_heads", 4)),
        )
    raise ConfigError(f"unknown backbone arch {arch!r}; expected 'cnn' or 'vit'")
