from .ingest import LAYOUTS, ingest_folder
from .manifest import (
    ManifestDataset,
    SampleRecord,
    load_image,
    load_label_map,
    read_manifest,
    write_manifest,
)
from .synthetic import PART_NAMES, SynthSpec, generate_synthetic, render_creature

__all__ = [
    "LAYOUTS",
    "ManifestDataset",
    "PART_NAMES",
    "SampleRecord",
    "SynthSpec",
    "generate_synthetic",
    "ingest_folder",
    "load_image",
    "load_label_map",
    "read_manifest",
    "render_creature",
    "write_manifest",
]
