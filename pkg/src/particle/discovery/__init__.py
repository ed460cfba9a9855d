"""Per-image part discovery: k-means over pixel features, color/texture
graph segmentation, and oracle segmentations from side information."""

from .fh import fh_segmentation
from .kmeans import kmeans_pp_init, part_discovery
from .oracle import oracle_segmentation
from .store import list_part_maps, load_part_map, save_part_map
from .types import Keypoint, KeypointAnnotation, PartSegmentation

__all__ = [
    "PartSegmentation",
    "Keypoint",
    "KeypointAnnotation",
    "part_discovery",
    "kmeans_pp_init",
    "fh_segmentation",
    "oracle_segmentation",
    "save_part_map",
    "load_part_map",
    "list_part_maps",
]
