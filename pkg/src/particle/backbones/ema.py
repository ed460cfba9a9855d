"""Exponential moving averages of model parameters (momentum encoder)."""

from __future__ import annotations

from typing import Iterable

import torch
from torch import nn


@torch.no_grad()
def ema_update(
    online: Iterable[torch.Tensor],
    target: Iterable[torch.Tensor],
    decay: float,
) -> None:
    """In-place target <- decay * target + (1 - decay) * online, elementwise.

    The two sequences must pair up one to one with matching shapes.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError(f"decay must lie in [0, 1], got {decay}")
    online = list(online)
    target = list(target)
    if len(online) != len(target):
        raise ValueError(
            f"parameter count mismatch: {len(online)} online vs {len(target)} target"
        )
    for i, (src, dst) in enumerate(zip(online, target)):
        if src.shape != dst.shape:
            raise ValueError(
                f"shape mismatch at index {i}: {tuple(src.shape)} vs {tuple(dst.shape)}"
            )
        dst.mul_(decay).add_(src.detach().to(dst.dtype), alpha=1.0 - decay)


@torch.no_grad()
def ema_update_module(online: nn.Module, target: nn.Module, decay: float) -> None:
    """EMA over both parameters and buffers of a module pair."""
    ema_update(online.parameters(), target.parameters(), decay)
    src_buf = list(online.buffers())
    dst_buf = list(target.buffers())
    if len(src_buf) != len(dst_buf):
        raise ValueError(
            f"buffer count mismatch: {len(src_buf)} online vs {len(dst_buf)} target"
        )
    for src, dst in zip(src_buf, dst_buf):
        if src.dtype.is_floating_point:
            dst.mul_(decay).add_(src.to(dst.dtype), alpha=1.0 - decay)
        else:
            dst.copy_(src)
