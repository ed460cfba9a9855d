"""Run configuration: a small dataclass tree with a flat dotted-key text
representation, override handling, presets, and content hashing."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .contrast.augment import AugmentationConfig
from .errors import ConfigError


@dataclass
class ModelConfig:
    arch: str = "cnn"  # "cnn" or "vit"
    cnn_width: int = 16
    blocks_per_stage: int = 1
    vit_patch: int = 8
    vit_dim: int = 64
    vit_depth: int = 3
    vit_heads: int = 4


@dataclass
class DiscoveryConfig:
    method: str = "hypercolumn"  # hypercolumn | vit_key | fh | oracle
    k: int = 8
    max_kmeans_iters: int = 500
    warm_start: bool = True
    init: str = "kmeans++"
    taps: str = "stem,block1,block2,block3"
    vit_layer: int = -1
    fh_scale: float = 400.0
    fh_min_size: int = 64
    oracle_mode: str = "voronoi_keypoints"  # voronoi_keypoints | figure_ground

    def tap_names(self) -> tuple:
        return tuple(t.strip() for t in self.taps.split(",") if t.strip())


@dataclass
class TrainingConfig:
    epochs_first: int = 30
    lr_first: float = 0.1
    epochs_next: int = 10
    lr_next: float = 0.02
    batch_size: int = 16
    weight_decay: float = 1.5e-6
    sgd_momentum: float = 0.9
    warmup_epochs: int = 2
    ema_decay: float = 0.99
    temperature: float = 0.1
    optimizer: str = "sgd"  # sgd | adamw
    pool_tap: str = "final"
    mask_cap: int = 16
    proj_dim: int = 128
    symmetrize: bool = False
    distill: bool = False
    distill_weight: float = 1.0


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    outer_iters: int = 2
    image_side: int = 64
    seed: int = 0

    def validate(self) -> None:
        if self.outer_iters < 0:
            raise ConfigError(f"outer_iters must be >= 0, got {self.outer_iters}")
        if self.image_side < 8:
            raise ConfigError(f"image_side too small: {self.image_side}")
        t = self.training
        for name in ("epochs_first", "epochs_next", "batch_size"):
            if getattr(t, name) < 1:
                raise ConfigError(f"training.{name} must be >= 1, got {getattr(t, name)}")
        for name in ("lr_first", "lr_next", "temperature"):
            if not getattr(t, name) > 0:
                raise ConfigError(f"training.{name} must be positive, got {getattr(t, name)}")
        if not 0.0 <= t.ema_decay <= 1.0:
            raise ConfigError(f"training.ema_decay must lie in [0, 1], got {t.ema_decay}")
        if t.optimizer not in ("sgd", "adamw"):
            raise ConfigError(f"training.optimizer must be sgd or adamw, got {t.optimizer!r}")
        d = self.discovery
        if d.method not in ("hypercolumn", "vit_key", "fh", "oracle"):
            raise ConfigError(f"discovery.method unknown: {d.method!r}")
        if d.k < 2:
            raise ConfigError(f"discovery.k must be >= 2, got {d.k}")
        if d.max_kmeans_iters < 1:
            raise ConfigError(f"discovery.max_kmeans_iters must be >= 1, got {d.max_kmeans_iters}")
        if d.init not in ("kmeans++", "random"):
            raise ConfigError(f"discovery.init must be kmeans++ or random, got {d.init!r}")
        if self.model.arch not in ("cnn", "vit"):
            raise ConfigError(f"model.arch must be cnn or vit, got {self.model.arch!r}")
        if self.model.arch == "vit" and self.image_side % self.model.vit_patch:
            raise ConfigError(
                f"image_side {self.image_side} not divisible by vit_patch {self.model.vit_patch}"
            )
        self.augmentation.validate()


_SECTIONS = ("model", "discovery", "training", "augmentation")


def to_flat(cfg: RunConfig) -> dict:
    """RunConfig -> ordered {dotted key: scalar} mapping."""
    flat = {}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        for f in dataclasses.fields(section):
            flat[f"{name}.{f.name}"] = getattr(section, f.name)
    for f in dataclasses.fields(RunConfig):
        if f.name not in _SECTIONS:
            flat[f.name] = getattr(cfg, f.name)
    return flat


def _parse_scalar(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"cannot parse {text!r} as a boolean")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def set_key(cfg: RunConfig, key: str, raw_value: str) -> None:
    """Assign one dotted key, coercing the text value to the field's type."""
    parts = key.split(".")
    if len(parts) == 1:
        target, attr = cfg, parts[0]
    elif len(parts) == 2 and parts[0] in _SECTIONS:
        target, attr = getattr(cfg, parts[0]), parts[1]
    else:
        raise ConfigError(f"unknown config key {key!r}")
    if not hasattr(target, attr) or attr.startswith("_"):
        raise ConfigError(f"unknown config key {key!r}")
    current = getattr(target, attr)
    if dataclasses.is_dataclass(current):
        raise ConfigError(f"config key {key!r} names a section, not a value")
    setattr(target, attr, _parse_scalar(str(raw_value), current))


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply `key=value` strings in order; unknown keys are hard errors."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        set_key(cfg, key.strip(), value)
    return cfg


def format_config(cfg: RunConfig) -> str:
    lines = ["# resolved run configuration"]
    for key, value in to_flat(cfg).items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save_config(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(cfg))
    return path


def load_config(path) -> RunConfig:
    """Parse a flat `key = value` document (# starts a comment)."""
    cfg = RunConfig()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        set_key(cfg, key.strip(), value.strip())
    return cfg


def config_hash(cfg: RunConfig) -> str:
    canonical = "\n".join(
        f"{k} = {v}" for k, v in sorted(to_flat(cfg).items())
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def paper_mode(arch: str) -> RunConfig:
    """Full-scale presets for the two published training recipes."""
    cfg = RunConfig()
    if arch == "cnn":
        cfg.model = ModelConfig(arch="cnn")
        cfg.image_side = 224
        cfg.discovery = DiscoveryConfig(
            method="hypercolumn", k=25, taps="maxpool,block1,block2,block3",
            fh_scale=400.0, fh_min_size=1000)
        cfg.training = TrainingConfig(
            epochs_first=600, lr_first=0.005, epochs_next=20, lr_next=0.05,
            batch_size=320, weight_decay=1.5e-6, sgd_momentum=0.9,
            warmup_epochs=10, ema_decay=0.996, temperature=0.1,
            optimizer="sgd", pool_tap="final",
        )
    elif arch == "vit":
        cfg.model = ModelConfig(arch="vit")
        cfg.image_side = 224
        cfg.discovery = DiscoveryConfig(
            method="vit_key", k=7, fh_scale=400.0, fh_min_size=1000)
        cfg.training = TrainingConfig(
            epochs_first=100, lr_first=1e-7, epochs_next=60, lr_next=1e-8,
            batch_size=64, weight_decay=0.4, warmup_epochs=10,
            ema_decay=0.996, temperature=0.1, optimizer="adamw",
            pool_tap="final", distill=True,
        )
    else:
        raise ConfigError(f"unknown paper mode {arch!r}; expected 'cnn' or 'vit'")
    return cfg
