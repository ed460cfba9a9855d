"""Synthetic multi-part creature benchmark.

Each image shows one articulated blob (body, head, tail, and appendages)
over a cluttered background. Part identity is encoded in hue (shared across
classes) while class identity is encoded in the texture statistics of the
object. Ground-truth part maps, figure-ground masks, and part-centroid
keypoints are written alongside the images, so every discovery method and
both evaluation protocols have labels to check against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from ..errors import ConfigError
from .manifest import SampleRecord, write_manifest

PART_NAMES = ("body", "head", "tail", "leg1", "leg2", "leg3", "leg4", "leg5")

_PART_COLORS = np.array([
    [0.75, 0.45, 0.20],  # body
    [0.20, 0.55, 0.80],  # head
    [0.70, 0.25, 0.60],  # tail
    [0.25, 0.65, 0.30],  # legs cycle from here
    [0.85, 0.75, 0.25],
    [0.55, 0.30, 0.75],
    [0.30, 0.70, 0.65],
    [0.80, 0.35, 0.35],
])

_BG_BASE = np.array([0.42, 0.46, 0.40])


@dataclass
class SynthSpec:
    n_classes: int = 4
    n_images: int = 80
    image_side: int = 64
    parts_per_object: int = 5
    clutter: float = 0.3
    texture_amp: float = 0.5
    edge_softness: float = 0.7
    seed: int = 0

    def validate(self) -> None:
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.parts_per_object < 2:
            raise ConfigError(
                f"parts_per_object must be >= 2, got {self.parts_per_object}")
        if self.parts_per_object > len(PART_NAMES):
            raise ConfigError(
                f"parts_per_object capped at {len(PART_NAMES)}, got {self.parts_per_object}")
        if self.n_images < self.n_classes:
            raise ConfigError("need at least one image per class")
        if not 0.0 <= self.clutter <= 1.0:
            raise ConfigError(f"clutter must lie in [0, 1], got {self.clutter}")
        if not 0.0 <= self.edge_softness <= 3.0:
            raise ConfigError(
                f"edge_softness must lie in [0, 3], got {self.edge_softness}")
        if self.image_side < 16:
            raise ConfigError(f"image_side too small: {self.image_side}")


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _ellipse_mask(xx, yy, center, axes, theta) -> np.ndarray:
    dx = xx - center[0]
    dy = yy - center[1]
    c, s = np.cos(theta), np.sin(theta)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (u / axes[0]) ** 2 + (v / axes[1]) ** 2 <= 1.0


def _texture_field(xx, yy, center, theta, family: int, freq: float,
                   phase: float) -> np.ndarray:
    """Texture modulation in [-1, 1], drawn in the object's frame.

    Families: 0 stripes, 1 checkerboard, 2 rings, 3 plain. Appearance is
    part-local (each part gets its own family), and the class rotates which
    family lands on which part, so class identity is carried by texture
    statistics that survive the renderer's optical softening while the parts
    of one object still differ from each other.
    """
    side = max(xx.max(), yy.max()) + 1
    dx = (xx - center[0]) / side
    dy = (yy - center[1]) / side
    c, s = np.cos(theta), np.sin(theta)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    family = family % 4
    if family == 0:
        return np.sin(2 * np.pi * freq * u + phase)
    if family == 1:
        return np.tanh(4.0 * np.sin(2 * np.pi * freq * u + phase)
                       * np.sin(2 * np.pi * freq * v + phase))
    if family == 2:
        r = np.sqrt(u ** 2 + v ** 2)
        return np.sin(2 * np.pi * freq * 2.0 * r + phase)
    return np.zeros_like(u)


def render_creature(spec: SynthSpec, class_id: int, rng):
    """Returns (image float32 [S,S,3] in [0,1], labels int32 [S,S], keypoints).

    Labels: 0 = background, 1..parts_per_object = parts. Keypoints are
    (name, x, y, visible) with (x, y) the part centroid snapped into the
    part's pixel set.
    """
    side = spec.image_side
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    p = spec.parts_per_object

    scale = rng.uniform(0.85, 1.1)
    theta = rng.uniform(0, 2 * np.pi)
    center = np.array([
        side / 2 + rng.uniform(-0.08, 0.08) * side,
        side / 2 + rng.uniform(-0.08, 0.08) * side,
    ])
    a = 0.26 * side * scale
    b = 0.15 * side * scale

    labels = np.zeros((side, side), dtype=np.int32)
    labels[_ellipse_mask(xx, yy, center, (a, b), theta)] = 1  # body

    if p >= 3:  # tail at the rear
        tail_c = center - _rot(theta) @ np.array([a * 1.05, 0.0])
        tail_theta = theta + rng.uniform(-0.5, 0.5)
        labels[_ellipse_mask(xx, yy, tail_c, (0.12 * side, 0.05 * side), tail_theta)] = 3

    for i in range(max(0, p - 3)):  # legs along the flanks
        along = (-0.45 + 0.9 * (i // 2) / max(1, (p - 3 + 1) // 2)) * a
        flank = (1.0 if i % 2 == 0 else -1.0) * b * 1.05
        leg_c = center + _rot(theta) @ np.array([along, flank])
        leg_r = 0.07 * side * scale
        labels[_ellipse_mask(xx, yy, leg_c, (leg_r, leg_r), 0.0)] = 4 + i

    head_c = center + _rot(theta) @ np.array([a * 0.98, 0.0])
    labels[_ellipse_mask(xx, yy, head_c, (0.11 * side,) * 2, 0.0)] = 2  # head

    # background: flat base, optional soft clutter blobs and noise
    image = np.empty((side, side, 3), dtype=np.float64)
    image[:] = _BG_BASE + rng.uniform(-0.03, 0.03, size=3)
    n_blobs = int(round(10 * spec.clutter))
    for _ in range(n_blobs):
        blob_c = rng.uniform(0, side, size=2)
        blob_ax = rng.uniform(0.05, 0.18, size=2) * side
        blob_theta = rng.uniform(0, np.pi)
        blob_col = rng.uniform(0.25, 0.7, size=3)
        blob = _ellipse_mask(xx, yy, blob_c, blob_ax, blob_theta)
        image[blob] = 0.5 * image[blob] + 0.5 * blob_col

    fg = labels > 0
    for part_id in range(1, p + 1):
        sel = labels == part_id
        if not sel.any():
            continue
        texture = _texture_field(xx, yy, center, theta,
                                 part_id - 1 + class_id, 4.5,
                                 rng.uniform(0, 2 * np.pi))
        base = _PART_COLORS[part_id - 1]
        image[sel] = base * (1.0 + spec.texture_amp * texture[sel, None])

    # optical softness: blur the composed frame (not the labels) so region
    # boundaries are gradual the way defocus makes them in photographs
    if spec.edge_softness > 0:
        for c in range(3):
            image[..., c] = gaussian_filter(image[..., c], spec.edge_softness)

    if spec.clutter > 0:
        noise = rng.normal(0.0, 0.02 + 0.03 * spec.clutter, size=image.shape)
        image = image + noise
    image = np.clip(image, 0.0, 1.0).astype(np.float32)

    keypoints = []
    for part_id in range(1, p + 1):
        ys, xs = np.nonzero(labels == part_id)
        name = PART_NAMES[part_id - 1]
        if len(xs) == 0:
            keypoints.append((name, 0.0, 0.0, False))
            continue
        cx, cy = xs.mean(), ys.mean()
        if labels[int(round(cy)), int(round(cx))] != part_id:
            d2 = (xs - cx) ** 2 + (ys - cy) ** 2
            j = int(np.argmin(d2))
            cx, cy = float(xs[j]), float(ys[j])
        keypoints.append((name, float(cx), float(cy), True))
    return image, labels, keypoints, fg


def _stratified_splits(class_ids, rng) -> list:
    """70/15/15 per class, at least one val and test record per class when
    the class has three or more images."""
    splits = [""] * len(class_ids)
    for cls in sorted(set(class_ids)):
        idxs = [i for i, c in enumerate(class_ids) if c == cls]
        idxs = list(rng.permutation(idxs))
        n = len(idxs)
        n_val = max(1, int(round(0.15 * n))) if n >= 3 else 0
        n_test = max(1, int(round(0.15 * n))) if n >= 3 else 0
        for j, i in enumerate(idxs):
            if j < n_val:
                splits[i] = "val"
            elif j < n_val + n_test:
                splits[i] = "test"
            else:
                splits[i] = "train"
    return splits


def generate_synthetic(spec: SynthSpec, out_dir) -> Path:
    """Render the dataset under out_dir; returns the manifest path."""
    spec.validate()
    out = Path(out_dir)
    for sub in ("images", "parts", "masks", "splits"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    class_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    class_ids = [i % spec.n_classes for i in range(spec.n_images)]
    class_ids = [int(c) for c in class_rng.permutation(class_ids)]
    split_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))
    splits = _stratified_splits(class_ids, split_rng)

    records = []
    kp_rows = []
    for idx in range(spec.n_images):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 3, idx]))
        image, labels, keypoints, fg = render_creature(spec, class_ids[idx], rng)
        stem = f"img_{idx:05d}"
        Image.fromarray((image * 255.0 + 0.5).astype(np.uint8)).save(
            out / "images" / f"{stem}.png")
        Image.fromarray(labels.astype(np.uint8), mode="L").save(
            out / "parts" / f"{stem}.png")
        Image.fromarray((fg * 255).astype(np.uint8), mode="L").save(
            out / "masks" / f"{stem}.png")
        for name, x, y, vis in keypoints:
            kp_rows.append((stem, name, f"{x:.2f}", f"{y:.2f}", int(vis)))
        records.append(SampleRecord(
            image=f"images/{stem}.png",
            class_id=class_ids[idx],
            split=splits[idx],
            parts=f"parts/{stem}.png",
            mask=f"masks/{stem}.png",
            keypoints=[(n, x, y, bool(v)) for n, x, y, v in keypoints],
        ))

    with open(out / "keypoints.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("image", "part", "x", "y", "visible"))
        writer.writerows(kp_rows)
    for split in ("train", "val", "test"):
        stems = [Path(r.image).stem for r in records if r.split == split]
        (out / "splits" / f"{split}.txt").write_text(
            "\n".join(stems) + ("\n" if stems else ""))
    return write_manifest(records, out / "manifest.jsonl")
