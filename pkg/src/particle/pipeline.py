"""Outer loop: alternate dataset-wide part discovery with part-contrastive
training, checkpointing each iteration."""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch

from .backbones import (
    HypercolumnSpec,
    build_encoder,
    encode,
    hypercolumn,
    load_checkpoint,
    save_checkpoint,
    vit_key_features,
)
from .config import RunConfig, config_hash, save_config
from .contrast import ContrastState, TokenDistiller, train_contrast
from .discovery import (
    PartSegmentation,
    fh_segmentation,
    oracle_segmentation,
    part_discovery,
    save_part_map,
)
from .errors import ConfigError, DataError
from .schedule import lr_schedule  # re-exported for callers

logger = logging.getLogger(__name__)

__all__ = ["IterationRecord", "discover_dataset", "run_particle", "lr_schedule",
           "build_run_state", "image_seed"]


@dataclass
class IterationRecord:
    iteration: int
    parts_dir: str
    checkpoint: str
    train_summary: dict = field(default_factory=dict)
    mean_inertia: float = 0.0
    mean_shared_masks: float = 0.0
    warm_start_hits: int = 0

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "parts_dir": self.parts_dir,
            "checkpoint": self.checkpoint,
            "train_summary": self.train_summary,
            "mean_inertia": self.mean_inertia,
            "mean_shared_masks": self.mean_shared_masks,
            "warm_start_hits": self.warm_start_hits,
        }


def image_seed(base_seed: int, iteration: int, index: int) -> int:
    """Stable per-image seed for the discovery pass."""
    return int(np.random.SeedSequence(
        [int(base_seed), int(iteration), int(index)]).generate_state(1)[0])


def _discover_one(encoder, image, cfg: RunConfig, seed: int,
                  warm_labels: Optional[np.ndarray],
                  annotation=None) -> PartSegmentation:
    d = cfg.discovery
    if d.method == "hypercolumn":
        taps = d.tap_names()
        out = encode(encoder, image, taps=taps)
        target = out.taps[taps[0]].grid
        spec = HypercolumnSpec(layer_ids=taps, target_resolution=target)
        features = hypercolumn(out.taps, spec)
        return part_discovery(
            features, d.k, warm_start=warm_labels,
            max_iters=d.max_kmeans_iters, seed=seed, init=d.init)
    if d.method == "vit_key":
        features = vit_key_features(encoder, image, layer=d.vit_layer)
        return part_discovery(
            features, d.k, warm_start=warm_labels,
            max_iters=d.max_kmeans_iters, seed=seed, init=d.init)
    if d.method == "fh":
        arr = np.asarray(image)
        return fh_segmentation(arr, scale=d.fh_scale, min_size=d.fh_min_size)
    if d.method == "oracle":
        if annotation is None:
            raise DataError("oracle discovery needs keypoint/mask annotations")
        return oracle_segmentation(annotation, mode=d.oracle_mode)
    raise ConfigError(f"unknown discovery method {d.method!r}")


def discover_dataset(encoder, dataset, cfg: RunConfig, iteration: int,
                     prev: Optional[List[Optional[PartSegmentation]]] = None,
                     ) -> tuple:
    """Part maps for every record in the dataset.

    Returns (list of PartSegmentation, stats dict). Warm starting reuses the
    previous iteration's label map per image when enabled and available.
    """
    records = dataset.records
    use_warm = (cfg.discovery.warm_start
                and cfg.discovery.method in ("hypercolumn", "vit_key"))
    segs: List[PartSegmentation] = []
    inertias = []
    warm_hits = 0
    for idx, rec in enumerate(records):
        image = dataset.load_image(rec)
        warm_labels = None
        if use_warm and prev is not None and prev[idx] is not None:
            prev_seg = prev[idx]
            if prev_seg.k != cfg.discovery.k:
                raise ConfigError(
                    f"warm start has k={prev_seg.k} but config asks k={cfg.discovery.k}")
            warm_labels = prev_seg.labels
            warm_hits += 1
        annotation = None
        if cfg.discovery.method == "oracle":
            annotation = dataset.keypoint_annotation(rec)
        seg = _discover_one(
            encoder, image, cfg,
            seed=image_seed(cfg.seed, iteration, idx),
            warm_labels=warm_labels,
            annotation=annotation)
        segs.append(seg)
        inertias.append(seg.inertia)
    stats = {
        "n_images": len(records),
        "mean_inertia": float(np.mean(inertias)) if inertias else 0.0,
        "warm_start_hits": warm_hits,
    }
    logger.info("discovery iter %d: %d images, %d warm-start hits, mean inertia %.4f",
                iteration, stats["n_images"], warm_hits, stats["mean_inertia"])
    return segs, stats


def build_run_state(cfg: RunConfig, init_checkpoint=None):
    """Encoder + contrast state (+ distiller for transformer mode)."""
    encoder = build_encoder(cfg.model, image_side=cfg.image_side, seed=cfg.seed)
    if init_checkpoint is not None:
        state_dict, manifest = load_checkpoint(init_checkpoint)
        if manifest.get("arch") not in (None, cfg.model.arch):
            raise ConfigError(
                f"checkpoint arch {manifest.get('arch')!r} does not match "
                f"config arch {cfg.model.arch!r}")
        encoder.load_state_dict(state_dict)
    torch.manual_seed(cfg.seed + 1)
    state = ContrastState(
        encoder,
        feature_dim=encoder.tap_dim(cfg.training.pool_tap),
        proj_dim=cfg.training.proj_dim,
        decay=cfg.training.ema_decay,
        temperature=cfg.training.temperature,
    )
    distiller = None
    if cfg.training.distill and cfg.model.arch == "vit":
        distiller = TokenDistiller(token_dim=encoder.feature_dim)
    return encoder, state, distiller


def run_particle(dataset, init_checkpoint, cfg: RunConfig, run_dir,
                 run_name: str = "run") -> List[IterationRecord]:
    """Algorithm: for each outer iteration, freeze the network, compute part
    maps for every image (warm-started when possible), then train the
    contrastive objective and checkpoint. outer_iters = 0 copies the initial
    checkpoint through untouched."""
    cfg.validate()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.txt")

    encoder, state, distiller = build_run_state(cfg, init_checkpoint)
    records: List[IterationRecord] = []

    if cfg.outer_iters == 0:
        final_path = run_dir / "checkpoint.zip"
        if init_checkpoint is not None:
            shutil.copyfile(init_checkpoint, final_path)
        else:
            save_checkpoint(final_path, encoder.state_dict(), arch=cfg.model.arch,
                            extra={"config_hash": config_hash(cfg)})
        return records

    train_index = [i for i, r in enumerate(dataset.records) if r.split == "train"]
    if not train_index:
        raise DataError("dataset has no training split")
    save_checkpoint(run_dir / "init.zip", encoder.state_dict(), arch=cfg.model.arch,
                    extra={"iteration": 0, "config_hash": config_hash(cfg)})
    images_cache = [dataset.load_image(r) for r in dataset.records]

    prev_segs: Optional[List[PartSegmentation]] = None
    for iteration in range(1, cfg.outer_iters + 1):
        iter_dir = run_dir / f"iter{iteration}"
        parts_dir = iter_dir / "parts"
        encoder.eval()
        segs, disc_stats = discover_dataset(
            encoder, dataset, cfg, iteration, prev=prev_segs)
        for rec, seg in zip(dataset.records, segs):
            save_part_map(parts_dir, Path(rec.image).stem, seg,
                          meta={"iteration": iteration, "method": cfg.discovery.method})
        if len(list(parts_dir.glob("*.png"))) != len(dataset.records):
            raise RuntimeError("part-map archive incomplete after discovery pass")

        epochs = cfg.training.epochs_first if iteration == 1 else cfg.training.epochs_next
        base_lr = cfg.training.lr_first if iteration == 1 else cfg.training.lr_next
        summary = train_contrast(
            state,
            [images_cache[i] for i in train_index],
            [segs[i] for i in train_index],
            cfg.augmentation,
            epochs=epochs,
            base_lr=base_lr,
            batch_size=cfg.training.batch_size,
            weight_decay=cfg.training.weight_decay,
            sgd_momentum=cfg.training.sgd_momentum,
            warmup_epochs=cfg.training.warmup_epochs,
            optimizer=cfg.training.optimizer,
            image_side=cfg.image_side,
            pool_tap=cfg.training.pool_tap,
            mask_cap=cfg.training.mask_cap,
            symmetrize=cfg.training.symmetrize,
            seed=int(np.random.SeedSequence([cfg.seed, 7, iteration]).generate_state(1)[0]),
            metrics_path=iter_dir / "metrics.csv",
            distiller=distiller,
            distill_weight=cfg.training.distill_weight,
        )
        ckpt_path = iter_dir / "checkpoint.zip"
        save_checkpoint(ckpt_path, encoder.state_dict(), arch=cfg.model.arch,
                        extra={"iteration": iteration, "config_hash": config_hash(cfg)})

        record = IterationRecord(
            iteration=iteration,
            parts_dir=str(parts_dir),
            checkpoint=str(ckpt_path),
            train_summary=summary,
            mean_inertia=disc_stats["mean_inertia"],
            mean_shared_masks=summary.get("mean_shared_masks", 0.0),
            warm_start_hits=disc_stats["warm_start_hits"],
        )
        (iter_dir / "record.json").write_text(
            json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n")
        records.append(record)
        prev_segs = segs

    if records:
        shutil.copyfile(records[-1].checkpoint, run_dir / "checkpoint.zip")
    return records
