"""Few-shot part segmentation: decoder on top of the encoder, full-network
fine-tuning, and 5-fold checkpoint selection on the validation set."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch
import torch.nn.functional as F
import torchvision.transforms.functional as TF
from torch import nn

from ..backbones.cnn import _group_norm
from ..backbones.encode import normalize_image_batch
from ..errors import DataError
from .metrics import miou


@dataclass
class SegData:
    train_images: List[np.ndarray]
    train_labels: List[np.ndarray]
    val_images: List[np.ndarray]
    val_labels: List[np.ndarray]
    test_images: List[np.ndarray]
    test_labels: List[np.ndarray]


@dataclass
class SegResult:
    mean_iou: float
    per_part_iou: np.ndarray
    fold_means: np.ndarray
    std: float

    def __post_init__(self):
        finite = self.per_part_iou[~np.isnan(self.per_part_iou)]
        if finite.size and (finite.min() < 0 or finite.max() > 1):
            raise ValueError("per-part IoU out of [0, 1]")


class SegDecoder(nn.Module):
    """Upsampling decoder: each stage is a 2x nearest upsample followed by a
    3x3 convolution; widths halve per stage."""

    def __init__(self, in_ch: int, n_out: int, stages: int = 4):
        super().__init__()
        blocks = []
        ch = in_ch
        for _ in range(stages):
            nxt = max(8, ch // 2)
            blocks.append(nn.Sequential(
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(ch, nxt, 3, padding=1, bias=False),
                _group_norm(nxt),
                nn.ReLU(inplace=True),
            ))
            ch = nxt
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Conv2d(ch, n_out, 1)

    def forward(self, feats: torch.Tensor, out_side: int) -> torch.Tensor:
        out = self.head(self.blocks(feats))
        if out.shape[-1] != out_side or out.shape[-2] != out_side:
            out = F.interpolate(out, size=(out_side, out_side),
                                mode="bilinear", align_corners=False)
        return out


class SegModel(nn.Module):
    def __init__(self, encoder: nn.Module, n_out: int, stages: int = 4):
        super().__init__()
        self.encoder = encoder
        self.decoder = SegDecoder(encoder.feature_dim, n_out, stages=stages)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        feats = self.encoder(x)
        return self.decoder(feats, x.shape[-1])


def _augment_pair(img: torch.Tensor, label: torch.Tensor, rng) -> tuple:
    """Horizontal flip (shared) plus mild color jitter (image only)."""
    if rng.uniform() < 0.5:
        img = TF.hflip(img)
        label = torch.flip(label, dims=[-1])
    if rng.uniform() < 0.8:
        img = TF.adjust_brightness(img, float(rng.uniform(0.8, 1.2)))
        img = TF.adjust_contrast(img, float(rng.uniform(0.8, 1.2)))
        img = TF.adjust_saturation(img, float(rng.uniform(0.9, 1.1)))
    return img, label


def _to_tensor(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(img, dtype=np.float32)).permute(2, 0, 1)


def _dataset_miou(model: nn.Module, images, labels, parts: int, mode: str) -> tuple:
    """Aggregate IoU over a whole split: intersections and unions are summed
    across images before dividing."""
    model.eval()
    inter = np.zeros(parts, dtype=np.int64)
    union = np.zeros(parts, dtype=np.int64)
    with torch.inference_mode():
        for img, lab in zip(images, labels):
            logits = model(normalize_image_batch(_to_tensor(img).unsqueeze(0)))
            if mode == "multiclass":
                pred = logits.argmax(dim=1).squeeze(0).numpy()
                for part in range(parts):
                    p_sel = pred == part
                    g_sel = np.asarray(lab) == part
                    inter[part] += np.logical_and(p_sel, g_sel).sum()
                    union[part] += np.logical_or(p_sel, g_sel).sum()
            else:
                probs = torch.sigmoid(logits).squeeze(0).numpy()
                binary = probs >= 0.5
                gt = np.asarray(lab).astype(bool)
                for part in range(parts):
                    inter[part] += np.logical_and(binary[part], gt[part]).sum()
                    union[part] += np.logical_or(binary[part], gt[part]).sum()
    model.train()
    ious = np.where(union > 0, inter / np.maximum(union, 1), np.nan)
    valid = union > 0
    mean = float(ious[valid].mean()) if valid.any() else float("nan")
    return ious, mean


def _validate_labels(data: SegData, parts: int, mode: str) -> None:
    for split_name, labels in (("train", data.train_labels),
                               ("val", data.val_labels),
                               ("test", data.test_labels)):
        for lab in labels:
            arr = np.asarray(lab)
            if mode == "multiclass":
                if arr.max() >= parts:
                    raise DataError(
                        f"{split_name} label id {int(arr.max())} >= part count {parts}")
            else:
                if arr.ndim != 3 or arr.shape[0] != parts:
                    raise DataError(
                        f"{split_name} multilabel map must be [parts, H, W] with "
                        f"{parts} channels, got {arr.shape}")


def train_seg_head(
    encoder: nn.Module,
    data: SegData,
    mode: str = "multiclass",
    *,
    parts: int,
    epochs: int = 200,
    lr: float = 1e-4,
    batch_size: int = 8,
    folds: int = 5,
    decoder_stages: int = 4,
    seed: int = 0,
    augment: bool = True,
) -> SegResult:
    """Fine-tune encoder+decoder on the few-shot split.

    The validation set is cut into `folds` folds; each fold independently
    picks its best epoch by validation mIoU, and the test scores at those
    epochs are averaged. The passed encoder is copied, never mutated.
    `parts` counts output channels: classes including background for
    multiclass, part channels for multilabel.
    """
    if mode not in ("multiclass", "multilabel"):
        raise ValueError(f"unknown mode {mode!r}")
    if not data.train_images or not data.val_images or not data.test_images:
        raise DataError("train/val/test splits must all be non-empty")
    _validate_labels(data, parts, mode)

    torch.manual_seed(seed)
    model = SegModel(copy.deepcopy(encoder), parts, stages=decoder_stages)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E6]))

    n_val = len(data.val_images)
    folds = min(folds, n_val)
    fold_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF0]))
    fold_of = np.array([i % folds for i in range(n_val)])
    fold_of = fold_of[fold_rng.permutation(n_val)]

    def eval_epoch():
        per_fold = []
        for f in range(folds):
            sel = np.nonzero(fold_of == f)[0]
            _, fold_mean = _dataset_miou(
                model,
                [data.val_images[i] for i in sel],
                [data.val_labels[i] for i in sel],
                parts, mode)
            per_fold.append(fold_mean)
        test_parts, test_mean = _dataset_miou(
            model, data.test_images, data.test_labels, parts, mode)
        return np.array(per_fold), test_mean, test_parts

    val_history = []
    test_history = []
    test_parts_history = []

    if epochs == 0:
        fold_scores, test_mean, test_parts = eval_epoch()
        return SegResult(
            mean_iou=test_mean,
            per_part_iou=test_parts,
            fold_means=np.full(folds, test_mean),
            std=0.0,
        )

    n_train = len(data.train_images)
    for _epoch in range(epochs):
        order = rng.permutation(n_train)
        model.train()
        for start in range(0, n_train, batch_size):
            idxs = order[start:start + batch_size]
            imgs, labs = [], []
            for i in idxs:
                img = _to_tensor(data.train_images[i])
                lab = torch.from_numpy(np.ascontiguousarray(data.train_labels[i]))
                if augment:
                    img, lab = _augment_pair(img, lab, rng)
                imgs.append(img)
                labs.append(lab)
            batch = normalize_image_batch(torch.stack(imgs))
            logits = model(batch)
            if mode == "multiclass":
                target = torch.stack(labs).long()
                loss = F.cross_entropy(logits, target)
            else:
                target = torch.stack(labs).float()
                loss = F.binary_cross_entropy_with_logits(logits, target)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
        fold_scores, test_mean, test_parts = eval_epoch()
        val_history.append(fold_scores)
        test_history.append(test_mean)
        test_parts_history.append(test_parts)

    val_history = np.stack(val_history)  # [epochs, folds]
    fold_means = []
    chosen_parts = []
    for f in range(folds):
        series = val_history[:, f]
        if np.isnan(series).all():
            best_epoch = len(series) - 1
        else:
            best_epoch = int(np.nanargmax(series))
        fold_means.append(test_history[best_epoch])
        chosen_parts.append(test_parts_history[best_epoch])
    fold_means = np.array(fold_means)
    per_part = np.nanmean(np.stack(chosen_parts), axis=0)
    return SegResult(
        mean_iou=float(fold_means.mean()),
        per_part_iou=per_part,
        fold_means=fold_means,
        std=float(fold_means.std()),
    )
