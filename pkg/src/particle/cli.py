"""Command-line entry point.

Verbs: synth, discover, train, iterate, probe, segeval, sweep, viz.
Exit codes: 0 success, 1 validation/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .backbones import build_encoder, load_checkpoint, save_checkpoint
from .config import RunConfig, apply_overrides, config_hash, load_config, paper_mode, save_config
from .contrast import train_contrast
from .data import ManifestDataset, SynthSpec, generate_synthetic
from .discovery import load_part_map, save_part_map
from .errors import ConfigError, DataError
from .evaluation import (
    SegData,
    adjusted_rand_index,
    append_leaderboard,
    dataset_features,
    linear_probe,
    train_seg_head,
    write_result_json,
)
from .pipeline import build_run_state, discover_dataset, run_particle

logger = logging.getLogger("particle")

VERBS = ("synth", "discover", "train", "iterate", "probe", "segeval", "sweep", "viz")


class _CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        raise ConfigError(message)


def runs_root() -> Path:
    return Path(os.environ.get("PARTICLE_RUNS_DIR", "runs"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="config override, repeatable")
    p.add_argument("--run-name", default="run")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--paper-mode", choices=("cnn", "vit"), default=None)


def _resolve_config(args) -> RunConfig:
    if args.paper_mode:
        cfg = paper_mode(args.paper_mode)
    elif args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    if args.config and args.paper_mode:
        # paper mode is the base; the file then refines it
        cfg = load_config(args.config)
    apply_overrides(cfg, args.set)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


def _prepare_run_dir(cfg: RunConfig, run_name: str) -> Path:
    run_dir = runs_root() / run_name
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.txt")
    return run_dir


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="particle", description=__doc__)
    sub = parser.add_subparsers(dest="verb", metavar="|".join(VERBS))

    p = sub.add_parser("synth", help="generate the synthetic part benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--n-images", type=int, default=80)
    p.add_argument("--n-classes", type=int, default=4)
    p.add_argument("--image-side", type=int, default=64)
    p.add_argument("--parts", type=int, default=5)
    p.add_argument("--clutter", type=float, default=0.3)
    p.add_argument("--texture-amp", type=float, default=0.5)
    p.add_argument("--edge-softness", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("discover", help="one discovery pass over a dataset")
    p.add_argument("--data", required=True, help="manifest.jsonl path")
    p.add_argument("--checkpoint", help="encoder weights to discover with")
    _add_common(p)

    p = sub.add_parser("train", help="one contrastive phase on fixed part maps")
    p.add_argument("--data", required=True)
    p.add_argument("--parts-dir", required=True)
    p.add_argument("--checkpoint", help="encoder weights to start from")
    _add_common(p)

    p = sub.add_parser("iterate", help="full discovery/training loop")
    p.add_argument("--data", required=True)
    p.add_argument("--init-checkpoint")
    _add_common(p)

    p = sub.add_parser("probe", help="linear probe on frozen features")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint")
    _add_common(p)

    p = sub.add_parser("segeval", help="few-shot part segmentation")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--mode", choices=("multiclass", "multilabel"), default="multiclass")
    p.add_argument("--train-images", type=int, default=25)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-4)
    _add_common(p)

    p = sub.add_parser("sweep", help="repeat iterate over a comma list in one --set")
    p.add_argument("--data", required=True)
    p.add_argument("--init-checkpoint")
    _add_common(p)

    p = sub.add_parser("viz", help="render part-map overlays for a run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--data-root", help="dataset root holding images/")
    p.add_argument("--out")
    p.add_argument("--max-images", type=int, default=16)
    return parser


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n_classes=args.n_classes, n_images=args.n_images,
        image_side=args.image_side, parts_per_object=args.parts,
        clutter=args.clutter, texture_amp=args.texture_amp,
        edge_softness=args.edge_softness, seed=args.seed)
    manifest = generate_synthetic(spec, args.out)
    print(manifest)
    return 0


def _load_encoder(cfg: RunConfig, checkpoint):
    encoder = build_encoder(cfg.model, image_side=cfg.image_side, seed=cfg.seed)
    if checkpoint:
        state, manifest = load_checkpoint(checkpoint)
        if manifest.get("arch") not in (None, cfg.model.arch):
            raise ConfigError(
                f"checkpoint arch {manifest.get('arch')!r} != config arch {cfg.model.arch!r}")
        encoder.load_state_dict(state)
    return encoder


def _cmd_discover(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _prepare_run_dir(cfg, args.run_name)
    dataset = ManifestDataset(args.data)
    encoder = _load_encoder(cfg, args.checkpoint)
    segs, stats = discover_dataset(encoder, dataset, cfg, iteration=1)
    parts_dir = run_dir / "parts"
    for rec, seg in zip(dataset.records, segs):
        save_part_map(parts_dir, Path(rec.image).stem, seg,
                      meta={"method": cfg.discovery.method})
    aris = []
    for rec, seg in zip(dataset.records, segs):
        if rec.parts is None:
            continue
        gt = dataset.load_parts(rec)
        pred = seg.labels
        if pred.shape != gt.shape:
            from PIL import Image as PILImage
            pred = np.asarray(PILImage.fromarray(pred.astype(np.uint8)).resize(
                (gt.shape[1], gt.shape[0]), resample=PILImage.NEAREST), dtype=np.int64)
        aris.append(adjusted_rand_index(pred, gt))
    if aris:
        stats["mean_ari_vs_ground_truth"] = float(np.mean(aris))
    write_result_json(run_dir / "discover.json", stats)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _prepare_run_dir(cfg, args.run_name)
    dataset = ManifestDataset(args.data)
    _, state, distiller = build_run_state(cfg, args.checkpoint)
    train_records = dataset.by_split("train")
    images = [dataset.load_image(r) for r in train_records]
    parts = [load_part_map(args.parts_dir, Path(r.image).stem)[0] for r in train_records]
    summary = train_contrast(
        state, images, parts, cfg.augmentation,
        epochs=cfg.training.epochs_first,
        base_lr=cfg.training.lr_first,
        batch_size=cfg.training.batch_size,
        weight_decay=cfg.training.weight_decay,
        sgd_momentum=cfg.training.sgd_momentum,
        warmup_epochs=cfg.training.warmup_epochs,
        optimizer=cfg.training.optimizer,
        image_side=cfg.image_side,
        pool_tap=cfg.training.pool_tap,
        mask_cap=cfg.training.mask_cap,
        symmetrize=cfg.training.symmetrize,
        seed=cfg.seed,
        metrics_path=run_dir / "metrics.csv",
        distiller=distiller,
        distill_weight=cfg.training.distill_weight,
    )
    save_checkpoint(run_dir / "checkpoint.zip", state.online_encoder.state_dict(),
                    arch=cfg.model.arch, extra={"config_hash": config_hash(cfg)})
    write_result_json(run_dir / "train.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_iterate(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _prepare_run_dir(cfg, args.run_name)
    dataset = ManifestDataset(args.data)
    records = run_particle(dataset, args.init_checkpoint, cfg, run_dir,
                           run_name=args.run_name)
    for rec in records:
        print(f"iter {rec.iteration}: inertia {rec.mean_inertia:.4f} "
              f"loss {rec.train_summary.get('final_loss', float('nan')):.4f}")
    return 0


def _features_by_split(encoder, dataset):
    feats, labels = {}, {}
    for split in ("train", "val", "test"):
        recs = dataset.by_split(split)
        if not recs:
            raise DataError(f"dataset has no {split!r} split")
        feats[split] = dataset_features(encoder, [dataset.load_image(r) for r in recs])
        labels[split] = np.array([r.class_id for r in recs])
    return feats, labels


def _cmd_probe(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _prepare_run_dir(cfg, args.run_name)
    dataset = ManifestDataset(args.data)
    encoder = _load_encoder(cfg, args.checkpoint)
    feats, labels = _features_by_split(encoder, dataset)
    result = linear_probe(
        feats["train"], labels["train"],
        feats["val"], labels["val"],
        feats["test"], labels["test"],
        seed=cfg.seed)
    record = {
        "accuracy": result.accuracy,
        "val_accuracy": result.val_accuracy,
        "chosen_c": result.chosen_c,
        "per_class_accuracy": result.per_class_accuracy,
        "feature_dim": result.feature_dim,
        "sizes": [result.n_train, result.n_val, result.n_test],
    }
    write_result_json(run_dir / "probe.json", record)
    append_leaderboard(runs_root() / "leaderboard.csv", args.run_name,
                       "probe", "accuracy", result.accuracy)
    print(f"probe accuracy {result.accuracy:.4f} (C={result.chosen_c})")
    return 0


def _build_seg_data(dataset, mode: str, train_images: int, seed: int):
    def split_arrays(split):
        recs = dataset.by_split(split)
        if not recs:
            raise DataError(f"dataset has no {split!r} split")
        images = [dataset.load_image(r) for r in recs]
        labels = [dataset.load_parts(r) for r in recs]
        return images, labels

    tr_img, tr_lab = split_arrays("train")
    va_img, va_lab = split_arrays("val")
    te_img, te_lab = split_arrays("test")
    if train_images and train_images < len(tr_img):
        rng = np.random.default_rng(seed)
        keep = sorted(rng.choice(len(tr_img), size=train_images, replace=False))
        tr_img = [tr_img[i] for i in keep]
        tr_lab = [tr_lab[i] for i in keep]
    parts = int(max(arr.max() for arr in tr_lab + va_lab + te_lab)) + 1
    if mode == "multilabel":
        def to_channels(maps):
            return [np.stack([(m == p) for p in range(1, parts)]).astype(np.float32)
                    for m in maps]
        tr_lab, va_lab, te_lab = map(to_channels, (tr_lab, va_lab, te_lab))
        parts = parts - 1
    data = SegData(tr_img, tr_lab, va_img, va_lab, te_img, te_lab)
    return data, parts


def _cmd_segeval(args) -> int:
    cfg = _resolve_config(args)
    run_dir = _prepare_run_dir(cfg, args.run_name)
    dataset = ManifestDataset(args.data)
    encoder = _load_encoder(cfg, args.checkpoint)
    data, parts = _build_seg_data(dataset, args.mode, args.train_images, cfg.seed)
    result = train_seg_head(
        encoder, data, args.mode, parts=parts,
        epochs=args.epochs, lr=args.lr, seed=cfg.seed,
        decoder_stages=4 if cfg.model.arch == "cnn" else 3)
    record = {
        "mean_iou": result.mean_iou,
        "std": result.std,
        "fold_means": result.fold_means,
        "per_part_iou": result.per_part_iou,
    }
    write_result_json(run_dir / "segeval.json", record)
    append_leaderboard(runs_root() / "leaderboard.csv", args.run_name,
                       "segeval", "miou", result.mean_iou, result.std)
    print(f"seg mIoU {result.mean_iou:.4f} +/- {result.std:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    swept = [(i, s) for i, s in enumerate(args.set) if "," in s.split("=", 1)[1]]
    if len(swept) != 1:
        raise ConfigError(
            "sweep needs exactly one --set KEY=v1,v2,... with a comma list")
    idx, spec_item = swept[0]
    key, _, joined = spec_item.partition("=")
    values = [v.strip() for v in joined.split(",") if v.strip()]
    fixed = [s for i, s in enumerate(args.set) if i != idx]
    summary_rows = []
    for value in values:
        sub_args = argparse.Namespace(**vars(args))
        sub_args.set = fixed + [f"{key}={value}"]
        sub_args.run_name = f"{args.run_name}-{key.replace('.', '_')}={value}"
        cfg = _resolve_config(sub_args)
        run_dir = _prepare_run_dir(cfg, sub_args.run_name)
        dataset = ManifestDataset(args.data)
        records = run_particle(dataset, args.init_checkpoint, cfg, run_dir,
                               run_name=sub_args.run_name)
        final = records[-1] if records else None
        row = {
            "run": sub_args.run_name,
            "key": key,
            "value": value,
            "mean_inertia": final.mean_inertia if final else float("nan"),
            "final_loss": final.train_summary.get("final_loss") if final else None,
        }
        summary_rows.append(row)
        append_leaderboard(runs_root() / "leaderboard.csv", sub_args.run_name,
                           "iterate", "mean_inertia",
                           row["mean_inertia"] if final else float("nan"))
    summary_path = runs_root() / f"{args.run_name}-sweep.csv"
    import csv as _csv
    with open(summary_path, "w", newline="") as fh:
        writer = _csv.DictWriter(fh, fieldnames=list(summary_rows[0]))
        writer.writeheader()
        writer.writerows(summary_rows)
    print(summary_path)
    return 0


def _cmd_viz(args) -> int:
    from .viz import render_run
    written = render_run(args.run_dir, dataset_root=args.data_root,
                         out_dir=args.out, max_images=args.max_images)
    for path in written:
        print(path)
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "discover": _cmd_discover,
    "train": _cmd_train,
    "iterate": _cmd_iterate,
    "probe": _cmd_probe,
    "segeval": _cmd_segeval,
    "sweep": _cmd_sweep,
    "viz": _cmd_viz,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.verb:
            parser.print_usage(sys.stderr)
            print("error: missing verb", file=sys.stderr)
            return 1
        return _HANDLERS[args.verb](args)
    except (ConfigError, DataError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        logger.exception("run failed: %s", exc)
        return 2


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
