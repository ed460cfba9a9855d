"""Step loop for part-contrastive training.

Each step builds a batch of augmented view pairs, pools features over the
shared part masks per sample, applies the projector/predictor heads, and
optimizes the cross-mask contrastive loss with cross-example negatives from
the rest of the batch. Per-step metrics stream to a CSV file.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from ..backbones.encode import normalize_image_batch
from ..schedule import lr_schedule
from .augment import AugmentationConfig, make_view_pair, resize_mask_nearest
from .heads import ContrastState
from .objective import mask_pool_all, part_contrast_loss, project_and_rescale

METRIC_COLUMNS = ("step", "loss", "shared_masks_mean", "skipped_samples", "lr", "ema_decay")


def _encoder_map(encoder, batch: torch.Tensor, pool_tap: str) -> tuple:
    """Run the encoder, returning (pooling feature map [B,C,h,w], cls tokens)."""
    final, taps, cls_token = encoder.forward_taps(batch)
    if pool_tap in ("final", "", None):
        return final, cls_token
    aliases = getattr(type(encoder), "TAP_ALIASES", {})
    name = aliases.get(pool_tap, pool_tap)
    if name not in taps:
        raise ValueError(f"unknown pooling tap {pool_tap!r}; encoder has {sorted(taps)}")
    return taps[name], cls_token


def _cap_ids(ids, cap: int, rng: np.random.Generator):
    ids = sorted(ids)
    if cap and len(ids) > cap:
        keep = rng.choice(len(ids), size=cap, replace=False)
        ids = [ids[i] for i in sorted(keep)]
    return ids


def build_optimizer(state: ContrastState, kind: str, lr: float,
                    weight_decay: float, momentum: float):
    params = [p for p in state.trainable_parameters() if p.requires_grad]
    if kind == "sgd":
        return torch.optim.SGD(params, lr=lr, momentum=momentum, weight_decay=weight_decay)
    if kind == "adamw":
        return torch.optim.AdamW(params, lr=lr, weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer {kind!r}; expected 'sgd' or 'adamw'")


def train_contrast(
    state: ContrastState,
    images: Sequence,
    part_maps: Sequence,
    aug: AugmentationConfig,
    *,
    epochs: int,
    base_lr: float,
    batch_size: int,
    weight_decay: float = 1.5e-6,
    sgd_momentum: float = 0.9,
    warmup_epochs: int = 10,
    optimizer: str = "sgd",
    image_side: int = 64,
    pool_tap: str = "final",
    mask_cap: int = 16,
    symmetrize: bool = False,
    seed: int = 0,
    metrics_path=None,
    distiller=None,
    distill_weight: float = 1.0,
) -> dict:
    """Train for `epochs` over (images, part_maps); returns a summary dict.

    Images are [H, W, 3] arrays in [0, 1]; part_maps are PartSegmentation
    objects or integer label arrays. Samples whose views share no mask id
    are skipped for the step and counted.
    """
    if len(images) != len(part_maps):
        raise ValueError(f"{len(images)} images but {len(part_maps)} part maps")
    if not images:
        raise ValueError("empty training set")
    n = len(images)
    batch_size = min(batch_size, n)
    steps_per_epoch = math.ceil(n / batch_size)
    total_steps = epochs * steps_per_epoch
    feature_side = state.online_encoder.tap_grid(pool_tap, image_side)

    opt = build_optimizer(state, optimizer, base_lr, weight_decay, sgd_momentum)
    order_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0FFEE]))
    cap_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xCA9]))

    writer = None
    csv_file = None
    if metrics_path is not None:
        metrics_path = Path(metrics_path)
        metrics_path.parent.mkdir(parents=True, exist_ok=True)
        csv_file = open(metrics_path, "w", newline="")
        writer = csv.writer(csv_file)
        writer.writerow(METRIC_COLUMNS)

    losses = []
    total_skipped = 0
    shared_counts = []
    step = 0
    state.train()
    try:
        for epoch in range(epochs):
            perm = order_rng.permutation(n)
            for start in range(0, n, batch_size):
                idxs = perm[start:start + batch_size]
                lr = lr_schedule(step, total_steps, base_lr, warmup_epochs, steps_per_epoch)
                for group in opt.param_groups:
                    group["lr"] = lr

                pairs = []
                for i in idxs:
                    pair_seed = int(np.random.SeedSequence(
                        [seed, epoch, int(i)]).generate_state(1)[0])
                    pairs.append(make_view_pair(
                        images[i], part_maps[i], aug, pair_seed,
                        out_side=image_side, feature_side=feature_side,
                    ))
                kept = [p for p in pairs if p.shared_mask_ids]
                skipped = len(pairs) - len(kept)
                total_skipped += skipped
                if not kept:
                    if writer:
                        writer.writerow([step, "", 0.0, skipped, lr, state.decay])
                    step += 1
                    continue

                batch_a = normalize_image_batch(torch.stack([p.view_a for p in kept]))
                batch_b = normalize_image_batch(torch.stack([p.view_b for p in kept]))
                ids_per_sample = [
                    _cap_ids(pair.shared_mask_ids, mask_cap, cap_rng) for pair in kept
                ]
                masks_a = [resize_mask_nearest(p.mask_a, feature_side) for p in kept]
                masks_b = [resize_mask_nearest(p.mask_b, feature_side) for p in kept]

                def _direction(online_batch, momentum_batch, online_masks, momentum_masks):
                    feats_on, cls_on = _encoder_map(state.online_encoder, online_batch, pool_tap)
                    with torch.no_grad():
                        feats_mo, cls_mo = _encoder_map(
                            state.momentum_encoder, momentum_batch, pool_tap)
                    sample_losses = []
                    pp_list, p_list = [], []
                    for j, ids in enumerate(ids_per_sample):
                        pooled_on = mask_pool_all(feats_on[j], online_masks[j], ids)
                        pooled_mo = mask_pool_all(feats_mo[j], momentum_masks[j], ids)
                        p, pp = project_and_rescale(state, pooled_on, pooled_mo)
                        p_list.append(p)
                        pp_list.append(pp)
                    for j in range(len(ids_per_sample)):
                        others = [pp_list[o] for o in range(len(pp_list)) if o != j]
                        negatives = torch.cat(others) if others else None
                        sample_losses.append(
                            part_contrast_loss(p_list[j], pp_list[j], negatives))
                    return torch.stack(sample_losses).mean(), cls_on, cls_mo

                loss, cls_a, cls_b = _direction(batch_a, batch_b, masks_a, masks_b)
                if symmetrize:
                    loss_rev, _, _ = _direction(batch_b, batch_a, masks_b, masks_a)
                    loss = 0.5 * (loss + loss_rev)

                if distiller is not None and cls_a is not None:
                    loss = loss + distill_weight * distiller.loss(cls_a, cls_b)

                opt.zero_grad(set_to_none=True)
                loss.backward()
                opt.step()
                state.momentum_update()
                if distiller is not None:
                    distiller.momentum_update(state.decay)

                shared_mean = float(np.mean([len(ids) for ids in ids_per_sample]))
                losses.append(float(loss.detach()))
                shared_counts.append(shared_mean)
                if writer:
                    writer.writerow([
                        step, f"{losses[-1]:.6f}", f"{shared_mean:.3f}",
                        skipped, f"{lr:.8g}", state.decay,
                    ])
                step += 1
    finally:
        if csv_file:
            csv_file.close()
    state.eval()

    return {
        "steps": step,
        "epochs": epochs,
        "mean_loss": float(np.mean(losses)) if losses else float("nan"),
        "final_loss": losses[-1] if losses else float("nan"),
        "skipped_samples": total_skipped,
        "mean_shared_masks": float(np.mean(shared_counts)) if shared_counts else 0.0,
    }
