"""Iterative part discovery and part-centric contrastive learning."""

from . import backbones, config, contrast, data, discovery, evaluation
from ._kernels import BACKEND as KERNEL_BACKEND
from .config import RunConfig, paper_mode
from .pipeline import IterationRecord, lr_schedule, run_particle

__version__ = "0.1.0"

__all__ = [
    "IterationRecord",
    "KERNEL_BACKEND",
    "RunConfig",
    "backbones",
    "config",
    "contrast",
    "data",
    "discovery",
    "evaluation",
    "lr_schedule",
    "paper_mode",
    "run_particle",
    "__version__",
]
