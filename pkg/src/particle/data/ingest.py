"""Generic folder ingestion.

Expected layout under the root (subsets optional per layout):

    root/images/*.png|jpg        required
    root/parts/*.png             optional part label maps
    root/masks/*.png             figure-ground masks (images+masks layouts)
    root/keypoints.csv           image,part,x,y,visible rows
    root/splits/{train,val,test}.txt   stems, one per line

Class ids come from first-level subdirectories of images/ when present
(sorted name order), else every record gets class 0.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List

import numpy as np
from PIL import Image

from ..errors import DataError
from .manifest import SampleRecord, write_manifest

LAYOUTS = ("images_only", "images+masks", "images+masks+keypoints")
_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


def _collect_images(images_dir: Path):
    """Returns {stem: (relative path, class_id)}."""
    if not images_dir.is_dir():
        raise DataError(f"missing images directory: {images_dir}")
    subdirs = sorted(d for d in images_dir.iterdir() if d.is_dir())
    out = {}
    if subdirs:
        class_of = {d.name: i for i, d in enumerate(subdirs)}
        files = [(f, class_of[f.parent.name]) for d in subdirs
                 for f in sorted(d.iterdir()) if f.suffix.lower() in _IMAGE_EXTS]
    else:
        files = [(f, 0) for f in sorted(images_dir.iterdir())
                 if f.suffix.lower() in _IMAGE_EXTS]
    if not files:
        raise DataError(f"no images found under {images_dir}")
    for f, cls in files:
        if f.stem in out:
            raise DataError(f"duplicate image stem {f.stem!r}")
        out[f.stem] = (f.relative_to(images_dir.parent).as_posix(), cls)
    return out


def _collect_aligned(dir_path: Path, stems, what: str) -> Dict[str, str]:
    if not dir_path.is_dir():
        raise DataError(f"missing {what} directory: {dir_path}")
    found = {f.stem: f.relative_to(dir_path.parent).as_posix()
             for f in sorted(dir_path.iterdir()) if f.suffix.lower() in _IMAGE_EXTS}
    missing = sorted(set(stems) - set(found))
    extra = sorted(set(found) - set(stems))
    if missing or extra:
        raise DataError(
            f"{what} stems do not align with images; "
            f"missing={missing[:5]}{'...' if len(missing) > 5 else ''} "
            f"extra={extra[:5]}{'...' if len(extra) > 5 else ''}"
        )
    return found


def _read_keypoints(path: Path, image_rel: Dict[str, str],
                    root: Path) -> Dict[str, list]:
    if not path.is_file():
        raise DataError(f"missing keypoint file: {path}")
    by_stem: Dict[str, list] = {s: [] for s in image_rel}
    sizes: Dict[str, tuple] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:5]] != \
                ["image", "part", "x", "y", "visible"]:
            raise DataError(
                f"{path}: expected header image,part,x,y,visible, got {header}")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 5:
                raise DataError(f"{path} row {rowno}: expected 5 fields, got {row}")
            stem, part, xs, ys, vis = (c.strip() for c in row[:5])
            if stem not in by_stem:
                raise DataError(f"{path} row {rowno}: unknown image stem {stem!r}")
            try:
                x, y, visible = float(xs), float(ys), bool(int(vis))
            except ValueError as exc:
                raise DataError(f"{path} row {rowno}: bad numeric field ({exc})") from exc
            if visible:
                if stem not in sizes:
                    with Image.open(root / image_rel[stem]) as im:
                        sizes[stem] = im.size  # (w, h)
                w, h = sizes[stem]
                if not (0 <= x < w and 0 <= y < h):
                    raise DataError(
                        f"{path} row {rowno}: keypoint ({x}, {y}) outside {w}x{h} image")
            by_stem[stem].append((part, x, y, visible))
    return by_stem


def _read_splits(root: Path, stems, seed: int) -> Dict[str, str]:
    splits_dir = root / "splits"
    assigned: Dict[str, str] = {}
    if splits_dir.is_dir():
        for split in ("train", "val", "test"):
            f = splits_dir / f"{split}.txt"
            if not f.is_file():
                continue
            for line in f.read_text().splitlines():
                stem = line.strip()
                if not stem:
                    continue
                if stem not in stems:
                    raise DataError(f"{f}: split lists unknown stem {stem!r}")
                if stem in assigned:
                    raise DataError(f"stem {stem!r} appears in multiple splits")
                assigned[stem] = split
        leftovers = sorted(set(stems) - set(assigned))
        if assigned and leftovers:
            raise DataError(
                f"split files do not cover all images; unassigned={leftovers[:5]}")
        if assigned:
            return assigned
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(sorted(stems)))
    n = len(order)
    n_val = max(1, int(round(0.15 * n))) if n >= 3 else 0
    n_test = max(1, int(round(0.15 * n))) if n >= 3 else 0
    for i, stem in enumerate(order):
        assigned[stem] = "val" if i < n_val else "test" if i < n_val + n_test else "train"
    return assigned


def ingest_folder(root, layout: str = "images_only", seed: int = 0) -> Path:
    """Build manifest.jsonl for an existing folder; returns its path."""
    if layout not in LAYOUTS:
        raise DataError(f"unknown layout {layout!r}; expected one of {LAYOUTS}")
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root does not exist: {root}")
    images = _collect_images(root / "images")
    stems = sorted(images)
    image_rel = {s: images[s][0] for s in stems}

    masks = {}
    if layout in ("images+masks", "images+masks+keypoints"):
        masks = _collect_aligned(root / "masks", stems, "mask")
    parts = {}
    if (root / "parts").is_dir():
        parts = _collect_aligned(root / "parts", stems, "part map")
    keypoints: Dict[str, list] = {s: [] for s in stems}
    if layout == "images+masks+keypoints":
        keypoints = _read_keypoints(root / "keypoints.csv", image_rel, root)

    split_of = _read_splits(root, stems, seed)
    records = []
    for stem in stems:
        rel, cls = images[stem]
        records.append(SampleRecord(
            image=rel,
            class_id=cls,
            split=split_of[stem],
            parts=parts.get(stem),
            mask=masks.get(stem),
            keypoints=keypoints.get(stem, []),
        ))
    return write_manifest(records, root / "manifest.jsonl")
