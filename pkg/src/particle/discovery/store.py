"""Persistence for part maps: 8-bit PNG label images plus a JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .types import PartSegmentation


def save_part_map(directory, stem: str, seg: PartSegmentation, meta: dict) -> Path:
    """Write ``<stem>.png`` (single-channel labels) and ``<stem>.json``."""
    if seg.k > 255:
        raise ValueError(f"cannot store k={seg.k} parts in an 8-bit label map")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    png_path = directory / f"{stem}.png"
    Image.fromarray(seg.labels.astype(np.uint8), mode="L").save(png_path)
    sidecar = {"k": seg.k, "inertia": seg.inertia}
    sidecar.update(meta)
    (directory / f"{stem}.json").write_text(json.dumps(sidecar, sort_keys=True))
    return png_path


def load_part_map(directory, stem: str) -> tuple[PartSegmentation, dict]:
    directory = Path(directory)
    png_path = directory / f"{stem}.png"
    if not png_path.exists():
        raise FileNotFoundError(f"no part map for {stem!r} in {directory}")
    labels = np.asarray(Image.open(png_path), dtype=np.int32)
    meta = json.loads((directory / f"{stem}.json").read_text())
    seg = PartSegmentation(
        labels=labels, k=int(meta["k"]), inertia=float(meta.get("inertia", 0.0))
    )
    return seg, meta


def list_part_maps(directory) -> list[str]:
    return sorted(p.stem for p in Path(directory).glob("*.png"))
