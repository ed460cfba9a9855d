"""Paired-view augmentation.

Two views of an image are produced per sample. Geometric transforms
(crop, flip) are applied identically to the image and its part-label map
(nearest-neighbor for the map); photometric transforms touch only the image.
The two branches use different blur/solarize probabilities.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

import numpy as np
import torch
import torchvision.transforms.functional as TF
from torchvision.transforms import InterpolationMode

from ..errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class AugmentationConfig:
    """Defaults follow the standard two-branch recipe: always crop, flip at
    0.5, jitter at 0.8, heavy blur on branch a, light blur plus occasional
    solarization on branch b."""

    crop_p: float = 1.0
    area_min: float = 0.08
    area_max: float = 1.0
    aspect_min: float = 0.75
    aspect_max: float = 1.33
    hflip_p: float = 0.5
    jitter_p: float = 0.8
    brightness_min: float = 0.6
    brightness_max: float = 1.4
    contrast_min: float = 0.6
    contrast_max: float = 1.4
    saturation_min: float = 0.8
    saturation_max: float = 1.2
    hue_min: float = -0.1
    hue_max: float = 0.1
    blur_kernel: int = 23
    blur_sigma_min: float = 0.1
    blur_sigma_max: float = 2.0
    blur_p_a: float = 1.0
    blur_p_b: float = 0.1
    solarize_threshold: float = 0.5
    solarize_p_a: float = 0.0
    solarize_p_b: float = 0.2

    def validate(self) -> None:
        for name in (
            "crop_p", "hflip_p", "jitter_p",
            "blur_p_a", "blur_p_b", "solarize_p_a", "solarize_p_b",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"augmentation.{name} must lie in [0, 1], got {v}")
        ranges = [
            ("area", self.area_min, self.area_max),
            ("aspect", self.aspect_min, self.aspect_max),
            ("brightness", self.brightness_min, self.brightness_max),
            ("contrast", self.contrast_min, self.contrast_max),
            ("saturation", self.saturation_min, self.saturation_max),
            ("hue", self.hue_min, self.hue_max),
            ("blur_sigma", self.blur_sigma_min, self.blur_sigma_max),
        ]
        for name, lo, hi in ranges:
            if not lo <= hi:
                raise ConfigError(f"augmentation {name} range [{lo}, {hi}] is inverted")
        if not 0.0 < self.area_min <= self.area_max <= 1.0:
            raise ConfigError("augmentation area range must sit inside (0, 1]")
        if self.aspect_min <= 0:
            raise ConfigError("augmentation aspect ratios must be positive")
        if self.blur_kernel < 1 or self.blur_kernel % 2 == 0:
            raise ConfigError(f"blur kernel must be odd and positive, got {self.blur_kernel}")
        if self.blur_sigma_min <= 0:
            raise ConfigError("blur sigma must be positive")


@dataclass
class ViewParams:
    """Concrete transform draws for one view."""

    crop_box: Tuple[int, int, int, int]  # top, left, height, width
    crop_fallback: bool
    flip: bool
    jitter: Optional[Tuple[float, float, float, float]]  # b, c, s, h factors
    jitter_order: Tuple[int, ...]
    blur_sigma: Optional[float]
    solarize: bool


@dataclass
class ViewPair:
    view_a: torch.Tensor  # [3, S, S] float in [0, 1]
    view_b: torch.Tensor
    mask_a: torch.Tensor  # [S, S] int64 part labels
    mask_b: torch.Tensor
    shared_mask_ids: frozenset = field(default_factory=frozenset)


def _sample_crop_box(rng: np.random.Generator, cfg: AugmentationConfig,
                     height: int, width: int) -> Tuple[Tuple[int, int, int, int], bool]:
    """Rejection-sample an area/aspect-constrained box; center crop after 10
    failures."""
    total = height * width
    log_lo, log_hi = np.log(cfg.aspect_min), np.log(cfg.aspect_max)
    for _ in range(10):
        target_area = total * rng.uniform(cfg.area_min, cfg.area_max)
        aspect = float(np.exp(rng.uniform(log_lo, log_hi)))
        w = int(round(np.sqrt(target_area * aspect)))
        h = int(round(np.sqrt(target_area / aspect)))
        if 0 < w <= width and 0 < h <= height:
            top = int(rng.integers(0, height - h + 1))
            left = int(rng.integers(0, width - w + 1))
            return (top, left, h, w), False
    logger.debug("crop sampling failed 10 times; using center crop")
    side = min(height, width)
    top = (height - side) // 2
    left = (width - side) // 2
    return (top, left, side, side), True


def sample_view_params(rng: np.random.Generator, cfg: AugmentationConfig,
                       branch: str, height: int, width: int) -> ViewParams:
    """Draw one view's transforms. `branch` is "a" or "b"; only the blur and
    solarize probabilities differ between branches."""
    if branch not in ("a", "b"):
        raise ValueError(f"branch must be 'a' or 'b', got {branch!r}")
    if rng.uniform() < cfg.crop_p:
        crop_box, fallback = _sample_crop_box(rng, cfg, height, width)
    else:
        crop_box, fallback = (0, 0, height, width), False
    flip = bool(rng.uniform() < cfg.hflip_p)
    jitter = None
    jitter_order: Tuple[int, ...] = (0, 1, 2, 3)
    if rng.uniform() < cfg.jitter_p:
        jitter = (
            float(rng.uniform(cfg.brightness_min, cfg.brightness_max)),
            float(rng.uniform(cfg.contrast_min, cfg.contrast_max)),
            float(rng.uniform(cfg.saturation_min, cfg.saturation_max)),
            float(rng.uniform(cfg.hue_min, cfg.hue_max)),
        )
        jitter_order = tuple(int(i) for i in rng.permutation(4))
    blur_p = cfg.blur_p_a if branch == "a" else cfg.blur_p_b
    blur_sigma = None
    if rng.uniform() < blur_p:
        blur_sigma = float(rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max))
    sol_p = cfg.solarize_p_a if branch == "a" else cfg.solarize_p_b
    solarize = bool(rng.uniform() < sol_p)
    return ViewParams(
        crop_box=crop_box,
        crop_fallback=fallback,
        flip=flip,
        jitter=jitter,
        jitter_order=jitter_order,
        blur_sigma=blur_sigma,
        solarize=solarize,
    )


def apply_geometric(t: torch.Tensor, params: ViewParams, out_side: int,
                    interpolation: str = "bilinear") -> torch.Tensor:
    """Crop, resize to out_side, and flip. Works on [C, H, W] float tensors.

    Label maps ([H, W] integer tensors) are resampled with nearest-neighbor;
    pass interpolation="nearest" explicitly when feeding a float image that
    must stay aligned with a label map bit for bit.
    """
    is_mask = t.ndim == 2
    work = t
    if is_mask:
        if interpolation != "nearest" and not t.dtype.is_floating_point:
            interpolation = "nearest"
        work = t.float().unsqueeze(0)
    mode = InterpolationMode.NEAREST if interpolation == "nearest" else InterpolationMode.BILINEAR
    top, left, h, w = params.crop_box
    out = TF.resized_crop(
        work, top, left, h, w, [out_side, out_side],
        interpolation=mode, antialias=False,
    )
    if params.flip:
        out = TF.hflip(out)
    if is_mask:
        return out.squeeze(0).round().long()
    return out


_JITTER_OPS = (
    lambda img, f: TF.adjust_brightness(img, f[0]),
    lambda img, f: TF.adjust_contrast(img, f[1]),
    lambda img, f: TF.adjust_saturation(img, f[2]),
    lambda img, f: TF.adjust_hue(img, f[3]),
)


def apply_photometric(img: torch.Tensor, params: ViewParams,
                      cfg: AugmentationConfig) -> torch.Tensor:
    """Color jitter, blur, solarize on a [3, H, W] float image in [0, 1]."""
    out = img
    if params.jitter is not None:
        for idx in params.jitter_order:
            out = _JITTER_OPS[idx](out, params.jitter)
    if params.blur_sigma is not None:
        k = min(cfg.blur_kernel, _largest_odd(out.shape[-1]), _largest_odd(out.shape[-2]))
        out = TF.gaussian_blur(out, [k, k], [params.blur_sigma, params.blur_sigma])
    if params.solarize:
        out = TF.solarize(out.clamp(0.0, 1.0), cfg.solarize_threshold)
    return out.clamp(0.0, 1.0)


def _largest_odd(n: int) -> int:
    return n if n % 2 else n - 1


def _as_image_tensor(image) -> torch.Tensor:
    if isinstance(image, torch.Tensor):
        t = image.detach().float()
        if t.ndim == 3 and t.shape[-1] == 3:
            t = t.permute(2, 0, 1)
        return t.contiguous()
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise ValueError(f"expected [H, W, 3] image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / 255.0
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32)).permute(2, 0, 1)


def resize_mask_nearest(mask: torch.Tensor, side: int) -> torch.Tensor:
    """Nearest-neighbor resize of a [H, W] integer label map to side x side."""
    out = TF.resize(
        mask.float().unsqueeze(0), [side, side],
        interpolation=InterpolationMode.NEAREST, antialias=False,
    )
    return out.squeeze(0).round().long()


def make_view_pair(image, parts, cfg: AugmentationConfig, seed: int,
                   out_side: int, feature_side: int) -> ViewPair:
    """Build two augmented views plus geometrically consistent part maps.

    `parts` is a PartSegmentation or a [H, W] integer array at image or
    feature resolution (upsampled here by nearest-neighbor when needed).
    Shared mask ids are those with at least one pixel in both views' maps
    after downsampling to the feature grid.
    """
    cfg.validate()
    img = _as_image_tensor(image)
    labels = getattr(parts, "labels", parts)
    mask = torch.from_numpy(np.ascontiguousarray(labels)).long() \
        if not isinstance(labels, torch.Tensor) else labels.long()
    h, w = img.shape[-2:]
    if mask.shape != (h, w):
        mask = TF.resize(
            mask.float().unsqueeze(0), [h, w],
            interpolation=InterpolationMode.NEAREST, antialias=False,
        ).squeeze(0).round().long()

    rng = np.random.default_rng(seed)
    params_a = sample_view_params(rng, cfg, "a", h, w)
    params_b = sample_view_params(rng, cfg, "b", h, w)

    view_a = apply_photometric(apply_geometric(img, params_a, out_side), params_a, cfg)
    view_b = apply_photometric(apply_geometric(img, params_b, out_side), params_b, cfg)
    mask_a = apply_geometric(mask, params_a, out_side, interpolation="nearest")
    mask_b = apply_geometric(mask, params_b, out_side, interpolation="nearest")

    small_a = resize_mask_nearest(mask_a, feature_side)
    small_b = resize_mask_nearest(mask_b, feature_side)
    shared = frozenset(np.intersect1d(
        small_a.numpy().ravel(), small_b.numpy().ravel()).tolist())
    return ViewPair(view_a=view_a, view_b=view_b, mask_a=mask_a, mask_b=mask_b,
                    shared_mask_ids=shared)


def config_fields() -> Tuple[str, ...]:
    return tuple(f.name for f in fields(AugmentationConfig))
