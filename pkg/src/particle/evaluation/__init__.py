from .features import dataset_features, image_features
from .metrics import adjusted_rand_index, miou
from .probe import C_GRID, ProbeResult, linear_probe
from .report import append_leaderboard, plot_part_ious, write_result_json
from .segmentation import SegData, SegDecoder, SegModel, SegResult, train_seg_head

__all__ = [
    "C_GRID",
    "ProbeResult",
    "SegData",
    "SegDecoder",
    "SegModel",
    "SegResult",
    "adjusted_rand_index",
    "append_leaderboard",
    "dataset_features",
    "image_features",
    "linear_probe",
    "miou",
    "plot_part_ious",
    "train_seg_head",
    "write_result_json",
]
