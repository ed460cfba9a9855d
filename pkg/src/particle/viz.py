"""Part-map visualization: color overlays and per-image iteration strips."""

from __future__ import annotations

import colorsys
from pathlib import Path

import numpy as np
from PIL import Image

from .data.manifest import load_image
from .discovery.store import list_part_maps, load_part_map
from .errors import DataError


def part_palette(k: int) -> np.ndarray:
    """k visually distinct RGB colors in [0, 1]; stable across calls so a
    label id keeps its color between iterations."""
    colors = []
    for i in range(k):
        hue = (i * 0.6180339887498949) % 1.0  # golden-ratio spacing
        sat = 0.65 if i % 2 == 0 else 0.85
        val = 0.95 if i % 3 else 0.75
        colors.append(colorsys.hsv_to_rgb(hue, sat, val))
    return np.array(colors, dtype=np.float32)


def overlay_parts(image: np.ndarray, labels: np.ndarray, alpha: float = 0.55) -> np.ndarray:
    """Blend a label coloring over the image; returns uint8 [H, W, 3]."""
    image = np.asarray(image, dtype=np.float32)
    if image.dtype == np.uint8:
        image = image / 255.0
    labels = np.asarray(labels)
    if labels.shape != image.shape[:2]:
        lab_img = Image.fromarray(labels.astype(np.uint8), mode="L").resize(
            (image.shape[1], image.shape[0]), resample=Image.NEAREST)
        labels = np.asarray(lab_img, dtype=np.int64)
    palette = part_palette(int(labels.max()) + 1)
    colored = palette[labels]
    out = (1.0 - alpha) * image + alpha * colored
    return (np.clip(out, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _iteration_dirs(run_dir: Path) -> list:
    dirs = sorted(
        (d for d in run_dir.glob("iter*") if (d / "parts").is_dir()),
        key=lambda d: int(d.name[4:]),
    )
    if not dirs:
        raise DataError(f"no part-map archives under {run_dir}")
    return dirs


def render_run(run_dir, dataset_root=None, out_dir=None, max_images: int = 16) -> list:
    """Write one horizontal strip per image: the original followed by each
    iteration's part overlay. Returns the written paths."""
    run_dir = Path(run_dir)
    iter_dirs = _iteration_dirs(run_dir)
    stems = list_part_maps(iter_dirs[0] / "parts")[:max_images]
    if not stems:
        raise DataError(f"empty part archive in {iter_dirs[0]}")
    out_dir = Path(out_dir) if out_dir else run_dir / "viz"
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for stem in stems:
        columns = []
        base_image = None
        if dataset_root is not None:
            img_path = Path(dataset_root) / "images" / f"{stem}.png"
            if img_path.exists():
                base_image = load_image(img_path)
        for it_dir in iter_dirs:
            seg, _ = load_part_map(it_dir / "parts", stem)
            if base_image is None:
                base_image = np.zeros(seg.labels.shape + (3,), dtype=np.float32)
            columns.append(overlay_parts(base_image, seg.labels))
        first = (np.clip(base_image, 0, 1) * 255 + 0.5).astype(np.uint8)
        if first.shape[:2] != columns[0].shape[:2]:
            first = np.asarray(Image.fromarray(first).resize(
                (columns[0].shape[1], columns[0].shape[0]), resample=Image.BILINEAR))
        strip = np.concatenate([first] + columns, axis=1)
        path = out_dir / f"{stem}.png"
        Image.fromarray(strip).save(path)
        written.append(path)
    return written
