from .augment import (
    AugmentationConfig,
    ViewPair,
    ViewParams,
    apply_geometric,
    apply_photometric,
    make_view_pair,
    resize_mask_nearest,
    sample_view_params,
)
from .distill import DistillHead, TokenDistiller
from .heads import ContrastState, ProjectionHead
from .objective import (
    mask_pool,
    mask_pool_all,
    part_contrast_loss,
    project_and_rescale,
    rescale_latents,
)
from .trainer import METRIC_COLUMNS, build_optimizer, train_contrast

__all__ = [
    "AugmentationConfig",
    "ContrastState",
    "DistillHead",
    "METRIC_COLUMNS",
    "ProjectionHead",
    "TokenDistiller",
    "ViewPair",
    "ViewParams",
    "apply_geometric",
    "apply_photometric",
    "build_optimizer",
    "make_view_pair",
    "mask_pool",
    "mask_pool_all",
    "part_contrast_loss",
    "project_and_rescale",
    "rescale_latents",
    "resize_mask_nearest",
    "sample_view_params",
    "train_contrast",
]
