"""Mask pooling, latent projection with temperature rescaling, and the
cross-mask contrastive loss."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import torch


def _as_torch_map(y) -> torch.Tensor:
    if isinstance(y, torch.Tensor):
        return y
    values = getattr(y, "values", y)
    if isinstance(values, torch.Tensor):
        return values
    return torch.from_numpy(np.ascontiguousarray(values))


def mask_pool(y, s, m: int):
    """Mean of feature vectors over the pixels labeled m.

    `y` is a [H, W, K] feature map (FeatureMap, array, or tensor) and `s` a
    [H, W] integer map of the same spatial shape. Raises if m never occurs.
    """
    feats = _as_torch_map(y)
    labels = s if isinstance(s, torch.Tensor) else torch.from_numpy(np.ascontiguousarray(s))
    if feats.shape[:2] != labels.shape:
        raise ValueError(
            f"feature grid {tuple(feats.shape[:2])} does not match map {tuple(labels.shape)}"
        )
    sel = labels == int(m)
    count = int(sel.sum())
    if count == 0:
        raise ValueError(f"part id {m} has no pixels in the segmentation")
    pooled = feats[sel].mean(dim=0)
    if isinstance(y, torch.Tensor) or isinstance(getattr(y, "values", None), torch.Tensor):
        return pooled
    return pooled.numpy()


def mask_pool_all(features: torch.Tensor, labels: torch.Tensor,
                  ids: Sequence[int]) -> torch.Tensor:
    """Pool a [C, H, W] feature tensor over each id in `ids`; returns [M, C].

    Differentiable: implemented as a normalized one-hot matmul.
    """
    if features.ndim != 3:
        raise ValueError(f"expected [C, H, W] features, got {tuple(features.shape)}")
    c, h, w = features.shape
    if labels.shape != (h, w):
        raise ValueError(
            f"label map {tuple(labels.shape)} does not match feature grid {(h, w)}"
        )
    flat = features.reshape(c, h * w)
    lab = labels.reshape(h * w)
    rows = []
    for m in ids:
        sel = (lab == int(m)).to(flat.dtype)
        total = sel.sum()
        if total.item() == 0:
            raise ValueError(f"part id {m} has no pixels in the segmentation")
        rows.append(sel / total)
    weights = torch.stack(rows, dim=0)
    return weights @ flat.T


def rescale_latents(z: torch.Tensor, temperature: float) -> torch.Tensor:
    """Rescale each row to L2 norm 1/sqrt(temperature).

    A zero-norm row means the head collapsed; that is surfaced as an error
    rather than clamped away.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    norms = z.norm(dim=-1, keepdim=True)
    if bool((norms == 0).any()):
        raise RuntimeError("zero-norm latent encountered during rescaling (head collapse)")
    return z / norms / math.sqrt(temperature)


def project_and_rescale(state, pooled_a: torch.Tensor, pooled_b: torch.Tensor):
    """Online path q(g(pooled_a)) and momentum path g_momentum(pooled_b),
    both rescaled to norm 1/sqrt(temperature). The momentum path never
    tracks gradients."""
    p = state.online_predictor(state.online_projector(pooled_a))
    p = rescale_latents(p, state.temperature)
    with torch.no_grad():
        p_prime = state.momentum_projector(pooled_b)
        p_prime = rescale_latents(p_prime, state.temperature)
    return p, p_prime


def part_contrast_loss(p: torch.Tensor, p_prime: torch.Tensor,
                       negatives: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Cross-mask InfoNCE, averaged over masks.

    For mask m the positive is p[m] . p_prime[m]; negatives are p[m] against
    the other masks' p_prime rows plus every row of the cross-example pool.
    Vectors are assumed pre-rescaled so dot products are already tempered.
    An empty index set contributes zero loss.
    """
    if p.shape != p_prime.shape:
        raise ValueError(f"shape mismatch: {tuple(p.shape)} vs {tuple(p_prime.shape)}")
    m = p.shape[0]
    if m == 0:
        return p.sum() * 0.0
    logits = p @ p_prime.T
    if negatives is not None and negatives.numel():
        logits = torch.cat([logits, p @ negatives.T], dim=1)
    pos = torch.diagonal(logits[:, :m])
    return (torch.logsumexp(logits, dim=1) - pos).mean()
