"""Config serialization round-trips, overrides, presets, and validation."""

import pytest

from particle.config import (
    RunConfig,
    apply_overrides,
    config_hash,
    load_config,
    paper_mode,
    save_config,
    set_key,
    to_flat,
)
from particle.errors import ConfigError


def test_round_trip_preserves_every_field(tmp_path):
    cfg = RunConfig()
    cfg.seed = 77
    cfg.training.lr_first = 0.0125
    cfg.discovery.method = "fh"
    cfg.augmentation.solarize_p_b = 0.35
    cfg.model.arch = "vit"
    path = save_config(cfg, tmp_path / "run.cfg")
    loaded = load_config(path)
    assert to_flat(loaded) == to_flat(cfg)
    assert config_hash(loaded) == config_hash(cfg)


def test_hash_changes_with_any_field():
    a = RunConfig()
    b = RunConfig()
    assert config_hash(a) == config_hash(b)
    b.training.temperature = 0.2
    assert config_hash(a) != config_hash(b)


def test_overrides_apply_in_order_and_coerce_types():
    cfg = RunConfig()
    apply_overrides(cfg, [
        "training.epochs_first=5",
        "training.lr_first=0.25",
        "discovery.warm_start=false",
        "outer_iters=3",
        "training.epochs_first=7",
    ])
    assert cfg.training.epochs_first == 7
    assert cfg.training.lr_first == 0.25
    assert cfg.discovery.warm_start is False
    assert cfg.outer_iters == 3


def test_unknown_key_is_a_hard_error():
    with pytest.raises(ConfigError, match="unknown config key"):
        set_key(RunConfig(), "training.nonexistent", "1")
    with pytest.raises(ConfigError, match="unknown config key"):
        set_key(RunConfig(), "nonsense.lr_first", "1")
    with pytest.raises(ConfigError, match="key=value"):
        apply_overrides(RunConfig(), ["training.lr_first"])


def test_bad_scalar_values_raise():
    with pytest.raises(ValueError):
        set_key(RunConfig(), "training.epochs_first", "three")
    with pytest.raises(ConfigError, match="boolean"):
        set_key(RunConfig(), "discovery.warm_start", "maybe")


def test_comments_and_blank_lines_ignored(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# full line comment\n\nseed = 5  # trailing comment\n")
    assert load_config(path).seed == 5


def test_malformed_line_reports_location(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("seed = 5\njust words\n")
    with pytest.raises(ConfigError, match=":2:"):
        load_config(path)


def test_cnn_preset_matches_published_recipe():
    cfg = paper_mode("cnn")
    assert cfg.image_side == 224
    assert cfg.model.arch == "cnn"
    assert cfg.discovery.method == "hypercolumn"
    assert cfg.discovery.k == 25
    assert cfg.discovery.tap_names() == ("maxpool", "block1", "block2", "block3")
    assert cfg.discovery.fh_scale == 400.0
    assert cfg.discovery.fh_min_size == 1000
    t = cfg.training
    assert (t.epochs_first, t.lr_first) == (600, 0.005)
    assert (t.epochs_next, t.lr_next) == (20, 0.05)
    assert t.batch_size == 320
    assert t.weight_decay == 1.5e-6
    assert t.warmup_epochs == 10
    assert t.ema_decay == 0.996
    assert t.temperature == 0.1
    assert t.optimizer == "sgd"
    assert t.pool_tap == "final"


def test_vit_preset_matches_published_recipe():
    cfg = paper_mode("vit")
    assert cfg.model.arch == "vit"
    assert cfg.discovery.method == "vit_key"
    assert cfg.discovery.k == 7
    t = cfg.training
    assert (t.epochs_first, t.lr_first) == (100, 1e-7)
    assert (t.epochs_next, t.lr_next) == (60, 1e-8)
    assert t.weight_decay == 0.4
    assert t.optimizer == "adamw"
    assert t.distill
    with pytest.raises(ConfigError, match="paper mode"):
        paper_mode("mlp")


def test_validate_rejects_bad_settings():
    cfg = RunConfig()
    cfg.outer_iters = -1
    with pytest.raises(ConfigError, match="outer_iters"):
        cfg.validate()

    cfg = RunConfig()
    cfg.training.temperature = 0.0
    with pytest.raises(ConfigError, match="temperature"):
        cfg.validate()

    cfg = RunConfig()
    cfg.discovery.method = "watershed"
    with pytest.raises(ConfigError, match="method"):
        cfg.validate()

    cfg = RunConfig()
    cfg.discovery.k = 1
    with pytest.raises(ConfigError, match="k must be"):
        cfg.validate()

    cfg = RunConfig()
    cfg.model.arch = "vit"
    cfg.image_side = 63
    with pytest.raises(ConfigError, match="divisible"):
        cfg.validate()

    RunConfig().validate()
    paper_mode("cnn").validate()
    paper_mode("vit").validate()
