"""Learning-rate schedule: warmup endpoint, cosine midpoint and endpoint."""

import math

import pytest

from particle.schedule import lr_schedule
from particle.config import paper_mode


def full_scale_cnn_settings():
    cfg = paper_mode("cnn")
    steps_per_epoch = 100
    total = cfg.training.epochs_first * steps_per_epoch
    return cfg.training.lr_first, cfg.training.warmup_epochs, steps_per_epoch, total


def test_warmup_reaches_base_lr_exactly_at_epoch_ten():
    base_lr, warmup_epochs, spe, total = full_scale_cnn_settings()
    assert warmup_epochs == 10
    step = warmup_epochs * spe
    assert lr_schedule(step, total, base_lr, warmup_epochs, spe) == base_lr


def test_cosine_midpoint_is_half_base_lr():
    base_lr, warmup_epochs, spe, total = full_scale_cnn_settings()
    warmup_steps = warmup_epochs * spe
    span = total - warmup_steps
    # progress = 1/2 exactly when step sits halfway through the decay span
    assert span % 2 == 0
    lr = lr_schedule(warmup_steps + span // 2, total, base_lr, warmup_epochs, spe)
    assert abs(lr - base_lr / 2) <= 1e-9


def test_schedule_starts_at_zero_and_ends_near_zero():
    base_lr, warmup_epochs, spe, total = full_scale_cnn_settings()
    assert lr_schedule(0, total, base_lr, warmup_epochs, spe) == 0.0
    tail = lr_schedule(total - 1, total, base_lr, warmup_epochs, spe)
    span = total - warmup_epochs * spe
    assert 0.0 <= tail <= base_lr * 0.5 * (1.0 - math.cos(math.pi / span))


def test_warmup_is_linear():
    for step in range(0, 1000, 50):
        lr = lr_schedule(step, 60000, 0.005, 10, 100)
        assert lr == pytest.approx(0.005 * step / 1000, rel=1e-12)


def test_decay_is_monotone_after_warmup():
    prev = math.inf
    for step in range(1000, 60000, 777):
        lr = lr_schedule(step, 60000, 0.005, 10, 100)
        assert lr <= prev
        prev = lr


def test_peak_never_exceeds_base_lr():
    vals = [lr_schedule(s, 3000, 0.1, 2, 100) for s in range(0, 3000, 7)]
    assert max(vals) <= 0.1 + 1e-15


def test_short_run_degenerates_gracefully():
    # warmup longer than the run: ramp spans all steps but stays defined
    vals = [lr_schedule(s, 50, 0.1, 10, 100) for s in range(50)]
    assert vals[0] == 0.0
    assert all(0.0 <= v <= 0.1 + 1e-15 for v in vals)
    assert lr_schedule(1, 2, 0.1, 10, 100) == 0.1


def test_out_of_range_step_raises():
    with pytest.raises(ValueError, match="outside"):
        lr_schedule(-1, 100, 0.1, 2, 10)
    with pytest.raises(ValueError, match="outside"):
        lr_schedule(100, 100, 0.1, 2, 10)
