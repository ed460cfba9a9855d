from .checkpoint import load_checkpoint, load_into, save_checkpoint
from .cnn import TinyCNN
from .ema import ema_update, ema_update_module
from .encode import (
    IMAGE_MEAN,
    IMAGE_STD,
    encode,
    normalize_image_batch,
    to_model_input,
    vit_key_features,
)
from .factory import build_encoder
from .hypercolumn import hypercolumn, l2_normalize_pixels, resample_bilinear
from .types import EncoderOutput, FeatureMap, HypercolumnSpec
from .vit import TinyViT

__all__ = [
    "EncoderOutput",
    "FeatureMap",
    "HypercolumnSpec",
    "IMAGE_MEAN",
    "IMAGE_STD",
    "TinyCNN",
    "TinyViT",
    "build_encoder",
    "ema_update",
    "ema_update_module",
    "encode",
    "hypercolumn",
    "l2_normalize_pixels",
    "load_checkpoint",
    "load_into",
    "normalize_image_batch",
    "resample_bilinear",
    "save_checkpoint",
    "to_model_input",
    "vit_key_features",
]
