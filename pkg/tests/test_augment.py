"""Two-branch augmentation: Monte-Carlo frequencies against the configured
probabilities, exact geometric consistency between images and label maps,
and the crop fallback path."""

import numpy as np
import pytest
import torch

from particle.contrast.augment import (
    AugmentationConfig,
    ViewParams,
    apply_geometric,
    make_view_pair,
    resize_mask_nearest,
    sample_view_params,
)
from particle.errors import ConfigError

N_DRAWS = 2000
TOL = 0.05


def empirical_rates(branch: str, n: int = N_DRAWS):
    cfg = AugmentationConfig()
    rng = np.random.default_rng(99 if branch == "a" else 100)
    counts = {"crop": 0, "flip": 0, "jitter": 0, "blur": 0, "solarize": 0}
    for _ in range(n):
        p = sample_view_params(rng, cfg, branch, 64, 64)
        counts["crop"] += p.crop_box != (0, 0, 64, 64)
        counts["flip"] += p.flip
        counts["jitter"] += p.jitter is not None
        counts["blur"] += p.blur_sigma is not None
        counts["solarize"] += p.solarize
    return {k: v / n for k, v in counts.items()}


def test_branch_a_monte_carlo_frequencies():
    rates = empirical_rates("a")
    assert abs(rates["crop"] - 1.0) <= TOL
    assert abs(rates["flip"] - 0.5) <= TOL
    assert abs(rates["jitter"] - 0.8) <= TOL
    assert abs(rates["blur"] - 1.0) <= TOL
    assert abs(rates["solarize"] - 0.0) <= TOL
    assert rates["solarize"] == 0.0  # probability is exactly zero


def test_branch_b_monte_carlo_frequencies():
    rates = empirical_rates("b")
    assert abs(rates["crop"] - 1.0) <= TOL
    assert abs(rates["flip"] - 0.5) <= TOL
    assert abs(rates["jitter"] - 0.8) <= TOL
    assert abs(rates["blur"] - 0.1) <= TOL
    assert abs(rates["solarize"] - 0.2) <= TOL


def test_blur_sigma_and_jitter_factors_stay_in_range(rng):
    cfg = AugmentationConfig()
    for _ in range(200):
        p = sample_view_params(rng, cfg, "a", 48, 48)
        if p.blur_sigma is not None:
            assert cfg.blur_sigma_min <= p.blur_sigma <= cfg.blur_sigma_max
        if p.jitter is not None:
            b, c, s, h = p.jitter
            assert cfg.brightness_min <= b <= cfg.brightness_max
            assert cfg.contrast_min <= c <= cfg.contrast_max
            assert cfg.saturation_min <= s <= cfg.saturation_max
            assert cfg.hue_min <= h <= cfg.hue_max
            assert sorted(p.jitter_order) == [0, 1, 2, 3]


def test_mask_transform_commutes_with_label_colored_image(rng):
    # painting the labels into a float image, transforming with
    # nearest-neighbor, and reading the values back must reproduce the
    # transformed mask bit for bit
    for trial in range(20):
        mask = torch.from_numpy(rng.integers(0, 9, size=(41, 53))).long()
        colored = mask.float().unsqueeze(0).repeat(3, 1, 1)
        params = sample_view_params(
            np.random.default_rng(trial), AugmentationConfig(), "a", 41, 53)
        got_mask = apply_geometric(mask, params, out_side=32)
        got_colored = apply_geometric(colored, params, out_side=32,
                                      interpolation="nearest")
        assert torch.equal(got_colored[0].long(), got_mask)
        assert torch.equal(got_colored[1].long(), got_mask)


def test_all_probabilities_zero_gives_identity_views(rng):
    cfg = AugmentationConfig(crop_p=0.0, hflip_p=0.0, jitter_p=0.0,
                             blur_p_a=0.0, blur_p_b=0.0,
                             solarize_p_a=0.0, solarize_p_b=0.0)
    img = torch.from_numpy(rng.uniform(size=(32, 32, 3)).astype(np.float32))
    mask = rng.integers(0, 4, size=(32, 32))
    pair = make_view_pair(img, mask, cfg, seed=7, out_side=32, feature_side=8)
    expected = img.permute(2, 0, 1)
    assert torch.equal(pair.view_a, expected)
    assert torch.equal(pair.view_b, expected)
    assert torch.equal(pair.mask_a, torch.from_numpy(mask).long())
    assert torch.equal(pair.mask_a, pair.mask_b)


def test_flip_only_pipeline_is_an_involution(rng):
    params = ViewParams(crop_box=(0, 0, 24, 24), crop_fallback=False,
                        flip=True, jitter=None, jitter_order=(0, 1, 2, 3),
                        blur_sigma=None, solarize=False)
    img = torch.from_numpy(rng.uniform(size=(3, 24, 24)).astype(np.float32))
    mask = torch.from_numpy(rng.integers(0, 5, size=(24, 24))).long()
    once_img = apply_geometric(img, params, out_side=24)
    once_mask = apply_geometric(mask, params, out_side=24)
    assert not torch.equal(once_img, img)
    assert torch.equal(apply_geometric(once_img, params, out_side=24), img)
    assert torch.equal(apply_geometric(once_mask, params, out_side=24), mask)


def test_crop_fallback_uses_centered_square():
    # a 1.0-area unit-aspect target can never fit a 10 x 100 frame, so all
    # ten rejection samples fail
    cfg = AugmentationConfig(area_min=1.0, area_max=1.0,
                             aspect_min=1.0, aspect_max=1.0)
    rng = np.random.default_rng(0)
    p = sample_view_params(rng, cfg, "a", 10, 100)
    assert p.crop_fallback
    assert p.crop_box == (0, 45, 10, 10)


def test_make_view_pair_deterministic_per_seed(rng):
    img = rng.uniform(size=(40, 40, 3)).astype(np.float32)
    mask = rng.integers(0, 6, size=(40, 40))
    a = make_view_pair(img, mask, AugmentationConfig(), 11, 32, 8)
    b = make_view_pair(img, mask, AugmentationConfig(), 11, 32, 8)
    c = make_view_pair(img, mask, AugmentationConfig(), 12, 32, 8)
    assert torch.equal(a.view_a, b.view_a) and torch.equal(a.view_b, b.view_b)
    assert torch.equal(a.mask_a, b.mask_a) and torch.equal(a.mask_b, b.mask_b)
    assert a.shared_mask_ids == b.shared_mask_ids
    assert not torch.equal(a.view_a, c.view_a)


def test_shared_ids_are_intersection_at_feature_resolution(rng):
    img = rng.uniform(size=(40, 40, 3)).astype(np.float32)
    mask = rng.integers(0, 6, size=(40, 40))
    pair = make_view_pair(img, mask, AugmentationConfig(), 3, 32, 4)
    ids_a = set(resize_mask_nearest(pair.mask_a, 4).numpy().ravel().tolist())
    ids_b = set(resize_mask_nearest(pair.mask_b, 4).numpy().ravel().tolist())
    assert pair.shared_mask_ids == frozenset(ids_a & ids_b)
    assert pair.shared_mask_ids  # a 4x4 grid always keeps at least one id


def test_solarize_inverts_bright_pixels():
    params = ViewParams(crop_box=(0, 0, 8, 8), crop_fallback=False,
                        flip=False, jitter=None, jitter_order=(0, 1, 2, 3),
                        blur_sigma=None, solarize=True)
    from particle.contrast.augment import apply_photometric
    img = torch.full((3, 8, 8), 0.75)
    out = apply_photometric(img, params, AugmentationConfig())
    assert torch.allclose(out, torch.full((3, 8, 8), 0.25), atol=1e-6)


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="blur kernel"):
        AugmentationConfig(blur_kernel=4).validate()
    with pytest.raises(ConfigError, match="inverted"):
        AugmentationConfig(brightness_min=2.0, brightness_max=1.0).validate()
    with pytest.raises(ConfigError, match="hflip_p"):
        AugmentationConfig(hflip_p=1.5).validate()
    with pytest.raises(ConfigError, match="area"):
        AugmentationConfig(area_min=0.0).validate()
