"""Segmentation and partition-agreement metrics."""

from __future__ import annotations

import numpy as np


def miou(pred, gt, parts: int, mode: str = "multiclass"):
    """Per-part IoU vector and its mean.

    multiclass: pred/gt are [H, W] integer maps; IoU_p over pixels equal to
    p; parts whose union is empty get NaN and are excluded from the mean.
    multilabel: pred/gt are [P, H, W] binary (pred may be probabilities and
    is thresholded at 0.5).
    """
    if mode == "multiclass":
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
        ious = np.full(parts, np.nan)
        for part in range(parts):
            p_sel = pred == part
            g_sel = gt == part
            union = np.logical_or(p_sel, g_sel).sum()
            if union == 0:
                continue
            ious[part] = np.logical_and(p_sel, g_sel).sum() / union
    elif mode == "multilabel":
        pred = np.asarray(pred)
        gt = np.asarray(gt).astype(bool)
        if pred.shape != gt.shape:
            raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
        if pred.shape[0] != parts:
            raise ValueError(f"expected {parts} channels, got {pred.shape[0]}")
        binary = pred if pred.dtype == bool else pred >= 0.5
        ious = np.full(parts, np.nan)
        for part in range(parts):
            union = np.logical_or(binary[part], gt[part]).sum()
            if union == 0:
                continue
            ious[part] = np.logical_and(binary[part], gt[part]).sum() / union
    else:
        raise ValueError(f"unknown mode {mode!r}")
    valid = ~np.isnan(ious)
    mean = float(ious[valid].mean()) if valid.any() else float("nan")
    return ious, mean


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement between two labelings of the same points.

    Computed from the contingency table; ties out at 1.0 when both
    partitions are identical up to relabeling and ~0 for independent ones.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label arrays differ in size: {a.shape} vs {b.shape}")
    n = a.size
    if n == 0:
        raise ValueError("cannot score empty labelings")
    _, a_inv = np.unique(a, return_inverse=True)
    _, b_inv = np.unique(b, return_inverse=True)
    n_a = a_inv.max() + 1
    n_b = b_inv.max() + 1
    table = np.zeros((n_a, n_b), dtype=np.int64)
    np.add.at(table, (a_inv, b_inv), 1)

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(np.int64(n))
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
