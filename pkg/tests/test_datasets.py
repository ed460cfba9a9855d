"""Synthetic dataset generation and folder ingestion."""

import hashlib
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from particle.data import (
    ManifestDataset,
    SampleRecord,
    SynthSpec,
    generate_synthetic,
    ingest_folder,
    read_manifest,
)
from particle.discovery import fh_segmentation
from particle.errors import ConfigError, DataError


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(path.relative_to(root).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


def test_generation_is_bitwise_deterministic(tmp_path):
    spec = SynthSpec(n_classes=3, n_images=12, image_side=64, seed=7)
    generate_synthetic(spec, tmp_path / "a")
    generate_synthetic(SynthSpec(n_classes=3, n_images=12, image_side=64, seed=7),
                       tmp_path / "b")
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")
    generate_synthetic(SynthSpec(n_classes=3, n_images=12, image_side=64, seed=8),
                       tmp_path / "c")
    assert tree_digest(tmp_path / "a") != tree_digest(tmp_path / "c")


def test_splits_are_disjoint_and_cover_everything(tiny_dataset):
    ds = tiny_dataset
    seen = {}
    for split in ("train", "val", "test"):
        for rec in ds.by_split(split):
            assert rec.image not in seen
            seen[rec.image] = split
    assert len(seen) == len(ds.records)
    assert all(len(ds.by_split(s)) > 0 for s in ("train", "val", "test"))
    # roughly stratified 70/15/15
    assert len(ds.by_split("train")) > len(ds.by_split("val"))
    assert len(ds.by_split("train")) > len(ds.by_split("test"))


def test_label_maps_and_classes_within_bounds(tiny_dataset):
    ds = tiny_dataset
    spec_parts = 5  # conftest leaves parts_per_object at its default
    for rec in ds.records:
        labels = ds.load_parts(rec)
        assert labels.min() >= 0
        assert labels.max() <= spec_parts
        assert 0 <= rec.class_id < 3
        mask = ds.load_mask(rec)
        assert set(np.unique(mask)) <= {0, 1}
        assert np.array_equal(mask > 0, labels > 0)


def test_keypoints_lie_inside_their_part(tiny_dataset):
    ds = tiny_dataset
    for rec in ds.records:
        labels = ds.load_parts(rec)
        for part_id, (name, x, y, visible) in enumerate(rec.keypoints, start=1):
            if not visible:
                continue
            assert labels[int(round(y)), int(round(x))] == part_id, (rec.image, name)


def test_images_decode_as_uint8_rgb(tiny_dataset):
    ds = tiny_dataset
    img = ds.load_image(ds.records[0])
    assert img.shape == (64, 64, 3)
    assert img.dtype == np.float32
    assert 0.0 <= img.min() and img.max() <= 1.0


def test_clutter_free_backgrounds_segment_into_few_components(tmp_path):
    spec = SynthSpec(n_classes=3, n_images=20, image_side=64, clutter=0.0, seed=5)
    ds = ManifestDataset(generate_synthetic(spec, tmp_path / "d"))
    ok = 0
    for rec in ds.records:
        seg = fh_segmentation(ds.load_image(rec), scale=400.0, min_size=64)
        if seg.k <= spec.parts_per_object + 1:
            ok += 1
    assert ok / len(ds.records) >= 0.95


def test_spec_validation():
    with pytest.raises(ConfigError, match="n_classes"):
        SynthSpec(n_classes=1).validate()
    with pytest.raises(ConfigError, match="parts_per_object"):
        SynthSpec(parts_per_object=1).validate()
    with pytest.raises(ConfigError, match="clutter"):
        SynthSpec(clutter=1.5).validate()
    with pytest.raises(ConfigError, match="one image per class"):
        SynthSpec(n_classes=4, n_images=3).validate()
    with pytest.raises(ConfigError, match="edge_softness"):
        SynthSpec(edge_softness=-0.1).validate()


def test_manifest_round_trip(tiny_dataset):
    recs = read_manifest(tiny_dataset.manifest_path)
    assert len(recs) == len(tiny_dataset.records)
    first = recs[0]
    assert isinstance(first, SampleRecord)
    round_tripped = SampleRecord.from_json(first.to_json())
    assert round_tripped == first


def make_folder(root: Path, n: int = 4, with_masks: bool = False,
                keypoint_rows=None, class_dirs: bool = False):
    rng = np.random.default_rng(0)
    (root / "images").mkdir(parents=True)
    if with_masks:
        (root / "masks").mkdir()
    stems = []
    for i in range(n):
        stem = f"s{i:03d}"
        stems.append(stem)
        img = Image.fromarray(rng.integers(0, 255, size=(32, 32, 3), dtype=np.uint8))
        if class_dirs:
            d = root / "images" / f"class{i % 2}"
            d.mkdir(exist_ok=True)
            img.save(d / f"{stem}.png")
        else:
            img.save(root / "images" / f"{stem}.png")
        if with_masks:
            m = Image.fromarray((rng.integers(0, 2, size=(32, 32)) * 255).astype(np.uint8))
            m.save(root / "masks" / f"{stem}.png")
    if keypoint_rows is not None:
        lines = ["image,part,x,y,visible"] + keypoint_rows
        (root / "keypoints.csv").write_text("\n".join(lines) + "\n")
    return stems


def test_ingest_images_only(tmp_path):
    make_folder(tmp_path, n=6)
    ds = ManifestDataset(ingest_folder(tmp_path, layout="images_only", seed=1))
    assert len(ds.records) == 6
    assert all(r.mask is None and r.parts is None for r in ds.records)
    splits = {r.split for r in ds.records}
    assert splits == {"train", "val", "test"}


def test_ingest_class_subdirectories_assign_class_ids(tmp_path):
    make_folder(tmp_path, n=4, class_dirs=True)
    ds = ManifestDataset(ingest_folder(tmp_path, layout="images_only"))
    assert sorted({r.class_id for r in ds.records}) == [0, 1]


def test_ingest_with_masks_sets_paths(tmp_path):
    make_folder(tmp_path, n=10, with_masks=True)
    ds = ManifestDataset(ingest_folder(tmp_path, layout="images+masks"))
    assert len(ds.records) == 10
    assert all(r.mask is not None for r in ds.records)
    assert ds.load_mask(ds.records[0]).shape == (32, 32)


def test_ingest_empty_root_errors(tmp_path):
    with pytest.raises(DataError, match="does not exist"):
        ingest_folder(tmp_path / "nope")
    (tmp_path / "images").mkdir()
    with pytest.raises(DataError, match="no images"):
        ingest_folder(tmp_path)


def test_ingest_mask_stem_mismatch_lists_offenders(tmp_path):
    make_folder(tmp_path, n=3, with_masks=True)
    (tmp_path / "masks" / "s000.png").rename(tmp_path / "masks" / "zray.png")
    with pytest.raises(DataError, match="s000"):
        ingest_folder(tmp_path, layout="images+masks")


def test_ingest_out_of_bounds_keypoint_names_row(tmp_path):
    make_folder(tmp_path, n=2, with_masks=True,
                keypoint_rows=["s000,beak,5,5,1", "s001,beak,99,5,1"])
    with pytest.raises(DataError, match="row 3"):
        ingest_folder(tmp_path, layout="images+masks+keypoints")


def test_ingest_invisible_keypoint_may_sit_outside(tmp_path):
    make_folder(tmp_path, n=2, with_masks=True,
                keypoint_rows=["s000,beak,5,5,1", "s001,beak,99,5,0"])
    ds = ManifestDataset(ingest_folder(tmp_path, layout="images+masks+keypoints"))
    rec = next(r for r in ds.records if "s001" in r.image)
    assert rec.keypoints[0][3] is False


def test_ingest_split_files_override_random_assignment(tmp_path):
    stems = make_folder(tmp_path, n=4)
    (tmp_path / "splits").mkdir()
    (tmp_path / "splits" / "train.txt").write_text("\n".join(stems[:2]) + "\n")
    (tmp_path / "splits" / "val.txt").write_text(stems[2] + "\n")
    (tmp_path / "splits" / "test.txt").write_text(stems[3] + "\n")
    ds = ManifestDataset(ingest_folder(tmp_path))
    by_stem = {Path(r.image).stem: r.split for r in ds.records}
    assert by_stem == {stems[0]: "train", stems[1]: "train",
                       stems[2]: "val", stems[3]: "test"}


def test_ingest_incomplete_split_files_error(tmp_path):
    stems = make_folder(tmp_path, n=4)
    (tmp_path / "splits").mkdir()
    (tmp_path / "splits" / "train.txt").write_text(stems[0] + "\n")
    with pytest.raises(DataError, match="unassigned"):
        ingest_folder(tmp_path)
