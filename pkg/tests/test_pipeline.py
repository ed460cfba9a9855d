"""Outer-loop plumbing: run directories, warm starts, checkpoint flow."""

import copy
import json
from pathlib import Path

import numpy as np
import pytest

from particle.backbones import load_checkpoint, save_checkpoint
from particle.config import RunConfig
from particle.data import ManifestDataset, write_manifest
from particle.discovery import PartSegmentation, list_part_maps, load_part_map
from particle.errors import ConfigError, DataError
from particle.pipeline import (build_run_state, discover_dataset, image_seed,
                               run_particle)


def small_cfg(seed: int = 3) -> RunConfig:
    cfg = RunConfig()
    cfg.seed = seed
    cfg.outer_iters = 2
    cfg.training.epochs_first = 2
    cfg.training.epochs_next = 1
    cfg.training.batch_size = 8
    cfg.training.warmup_epochs = 1
    return cfg


@pytest.fixture(scope="module")
def finished_run(tiny_dataset, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("run")
    cfg = small_cfg()
    records = run_particle(tiny_dataset, None, cfg, run_dir, "plumbing")
    return run_dir, cfg, records, tiny_dataset


def test_image_seed_is_deterministic_and_distinct():
    assert image_seed(7, 1, 3) == image_seed(7, 1, 3)
    seeds = {image_seed(7, it, idx) for it in (1, 2) for idx in range(10)}
    assert len(seeds) == 20


def test_build_run_state_feature_dim_follows_tap():
    cfg = RunConfig()
    cfg.training.pool_tap = "block2"
    encoder, state, distiller = build_run_state(cfg)
    assert state.online_projector.net[0].in_features == encoder.tap_dim("block2")
    assert distiller is None


def test_build_run_state_rejects_arch_mismatch(tmp_path):
    cfg = RunConfig()
    encoder, _, _ = build_run_state(cfg)
    ckpt = tmp_path / "weights.zip"
    save_checkpoint(ckpt, encoder.state_dict(), arch="vit")
    with pytest.raises(ConfigError, match="arch"):
        build_run_state(cfg, ckpt)


def test_zero_iterations_checkpoint_is_reproducible(tiny_dataset, tmp_path):
    cfg = small_cfg()
    cfg.outer_iters = 0
    run_particle(tiny_dataset, None, cfg, tmp_path / "a", "zero")
    run_particle(tiny_dataset, None, cfg, tmp_path / "b", "zero")
    a = (tmp_path / "a" / "checkpoint.zip").read_bytes()
    b = (tmp_path / "b" / "checkpoint.zip").read_bytes()
    assert a == b


def test_zero_iterations_passes_init_through(tiny_dataset, tmp_path):
    cfg = small_cfg()
    encoder, _, _ = build_run_state(cfg)
    init = tmp_path / "init.zip"
    save_checkpoint(init, encoder.state_dict(), arch="cnn")
    cfg.outer_iters = 0
    run_particle(tiny_dataset, init, cfg, tmp_path / "run", "zero")
    assert (tmp_path / "run" / "checkpoint.zip").read_bytes() == init.read_bytes()


def test_run_layout_and_records(finished_run):
    run_dir, cfg, records, dataset = finished_run
    assert [r.iteration for r in records] == [1, 2]
    assert (run_dir / "config.txt").exists()
    assert (run_dir / "init.zip").exists()
    for it in (1, 2):
        parts_dir = run_dir / f"iter{it}" / "parts"
        assert len(list_part_maps(parts_dir)) == len(dataset)
        assert (run_dir / f"iter{it}" / "metrics.csv").exists()
        meta = json.loads((run_dir / f"iter{it}" / "record.json").read_text())
        assert meta["iteration"] == it
        assert meta["train_summary"]["epochs"] >= 1
    final = (run_dir / "checkpoint.zip").read_bytes()
    assert final == (run_dir / "iter2" / "checkpoint.zip").read_bytes()


def test_warm_start_hits_every_image_after_first_iteration(finished_run):
    run_dir, cfg, records, dataset = finished_run
    assert records[0].warm_start_hits == 0
    assert records[1].warm_start_hits == len(dataset)


def test_part_maps_respect_k(finished_run):
    run_dir, cfg, records, dataset = finished_run
    stem = Path(dataset.records[0].image).stem
    seg, meta = load_part_map(run_dir / "iter1" / "parts", stem)
    assert seg.k == cfg.discovery.k
    assert seg.labels.max() < cfg.discovery.k
    assert meta["iteration"] == 1


def test_cold_restart_reports_zero_warm_hits(finished_run):
    run_dir, cfg, records, dataset = finished_run
    encoder, _, _ = build_run_state(cfg, run_dir / "iter1" / "checkpoint.zip")
    prev = [load_part_map(run_dir / "iter1" / "parts", Path(r.image).stem)[0]
            for r in dataset.records]
    cold_cfg = copy.deepcopy(cfg)
    cold_cfg.discovery.warm_start = False
    _, stats = discover_dataset(encoder, dataset, cold_cfg, iteration=2, prev=prev)
    assert stats["warm_start_hits"] == 0
    _, stats = discover_dataset(encoder, dataset, cfg, iteration=2, prev=prev)
    assert stats["warm_start_hits"] == len(dataset)


def test_warm_start_k_mismatch_is_an_error(finished_run):
    run_dir, cfg, records, dataset = finished_run
    encoder, _, _ = build_run_state(cfg)
    bad = [PartSegmentation(labels=np.zeros((8, 8), dtype=np.int64), k=cfg.discovery.k + 1)
           for _ in dataset.records]
    with pytest.raises(ConfigError, match="warm start"):
        discover_dataset(encoder, dataset, cfg, iteration=2, prev=bad)


def test_missing_train_split_is_an_error(tiny_dataset, tmp_path):
    eval_only = [copy.deepcopy(r) for r in tiny_dataset.records]
    for r in eval_only:
        r.split = "test"
    manifest = tiny_dataset.manifest_path.parent / "eval_only.jsonl"
    write_manifest(eval_only, manifest)
    cfg = small_cfg()
    with pytest.raises(DataError, match="training split"):
        run_particle(ManifestDataset(manifest), None, cfg, tmp_path / "r", "x")
