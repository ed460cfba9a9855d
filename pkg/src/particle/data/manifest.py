"""Dataset manifests: line-delimited JSON records pointing at image, part
map, mask, and keypoint data on disk."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

from ..discovery.types import Keypoint, KeypointAnnotation
from ..errors import DataError

SPLITS = ("train", "val", "test")


@dataclass
class SampleRecord:
    image: str
    class_id: int
    split: str
    parts: Optional[str] = None
    mask: Optional[str] = None
    keypoints: List[tuple] = field(default_factory=list)  # (name, x, y, visible)

    def to_json(self) -> str:
        return json.dumps({
            "image": self.image,
            "class_id": self.class_id,
            "split": self.split,
            "parts": self.parts,
            "mask": self.mask,
            "keypoints": [[n, float(x), float(y), bool(v)] for n, x, y, v in self.keypoints],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SampleRecord":
        obj = json.loads(line)
        return cls(
            image=obj["image"],
            class_id=int(obj["class_id"]),
            split=obj["split"],
            parts=obj.get("parts"),
            mask=obj.get("mask"),
            keypoints=[(n, float(x), float(y), bool(v))
                       for n, x, y, v in obj.get("keypoints", [])],
        )


def write_manifest(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
    return path


def read_manifest(path) -> List[SampleRecord]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(SampleRecord.from_json(line))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"{path}:{lineno}: bad manifest record ({exc})") from exc
    return records


def load_image(path) -> np.ndarray:
    """8-bit image file -> float32 [H, W, 3] in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    except (OSError, ValueError) as exc:
        raise DataError(f"unreadable image {path}: {exc}") from exc
    return arr


def load_label_map(path) -> np.ndarray:
    """Single-channel label PNG -> int32 [H, W]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=np.int32)
    except (OSError, ValueError) as exc:
        raise DataError(f"unreadable label map {path}: {exc}") from exc
    return arr


class ManifestDataset:
    """A manifest plus its root directory, with array loading helpers."""

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent
        self.records = read_manifest(self.manifest_path)
        if not self.records:
            raise DataError(f"manifest {self.manifest_path} holds no records")

    def __len__(self) -> int:
        return len(self.records)

    def by_split(self, split: str) -> List[SampleRecord]:
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}; expected one of {SPLITS}")
        return [r for r in self.records if r.split == split]

    def load_image(self, rec: SampleRecord) -> np.ndarray:
        return load_image(self.root / rec.image)

    def load_parts(self, rec: SampleRecord) -> np.ndarray:
        if rec.parts is None:
            raise DataError(f"record {rec.image} has no part label map")
        return load_label_map(self.root / rec.parts)

    def load_mask(self, rec: SampleRecord) -> np.ndarray:
        if rec.mask is None:
            raise DataError(f"record {rec.image} has no figure-ground mask")
        return load_label_map(self.root / rec.mask) > 0

    def keypoint_annotation(self, rec: SampleRecord) -> KeypointAnnotation:
        mask = self.load_mask(rec) if rec.mask is not None else None
        points = [Keypoint(name=n, x=x, y=y, visible=v) for n, x, y, v in rec.keypoints]
        return KeypointAnnotation(points=points, foreground_mask=mask)

    def class_count(self) -> int:
        return len({r.class_id for r in self.records})
