"""Result serialization: JSON records, a CSV leaderboard, optional plots."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

LEADERBOARD_COLUMNS = ("run", "task", "metric", "value", "std")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [None if (isinstance(v, float) and np.isnan(v)) else v
                for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and np.isnan(obj):
        return None
    return obj


def write_result_json(path, record: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")
    return path


def append_leaderboard(path, run: str, task: str, metric: str,
                       value: float, std: float = 0.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(LEADERBOARD_COLUMNS)
        writer.writerow([run, task, metric, f"{value:.6f}", f"{std:.6f}"])
    return path


def plot_part_ious(path, per_part_iou, part_names=None) -> Path:
    """Bar chart of per-part IoU; parts with no pixels are skipped."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    per_part_iou = np.asarray(per_part_iou, dtype=float)
    names = part_names or [f"part{i}" for i in range(len(per_part_iou))]
    valid = ~np.isnan(per_part_iou)
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * valid.sum()), 3))
    ax.bar([n for n, v in zip(names, valid) if v], per_part_iou[valid])
    ax.set_ylabel("IoU")
    ax.set_ylim(0, 1)
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
