"""Deterministic checkpoint files.

A checkpoint is a zip archive holding a JSON manifest plus one .npy entry per
tensor. Zip entry timestamps are pinned so that re-serializing identical
weights yields a byte-identical file.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path
from typing import Optional

import numpy as np
import torch

FORMAT_VERSION = 1
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


def _tensor_entries(state_dict) -> dict:
    out = {}
    for name, value in state_dict.items():
        arr = value.detach().cpu().numpy() if isinstance(value, torch.Tensor) else np.asarray(value)
        out[name] = arr
    return out


def save_checkpoint(
    path,
    state_dict,
    arch: str,
    extra: Optional[dict] = None,
) -> Path:
    """Write model weights to `path` as a reproducible zip archive."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors = _tensor_entries(state_dict)
    manifest = {
        "format_version": FORMAT_VERSION,
        "arch": arch,
        "tensor_names": sorted(tensors),
        "extra": extra or {},
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("manifest.json", date_time=_FIXED_DATE)
        info.compress_type = zipfile.ZIP_DEFLATED
        info.external_attr = 0o644 << 16
        zf.writestr(info, json.dumps(manifest, indent=2, sort_keys=True))
        for name in sorted(tensors):
            arr_buf = io.BytesIO()
            np.lib.format.write_array(arr_buf, np.ascontiguousarray(tensors[name]))
            info = zipfile.ZipInfo(f"tensors/{name}.npy", date_time=_FIXED_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, arr_buf.getvalue())
    path.write_bytes(buf.getvalue())
    return path


def load_checkpoint(path):
    """Returns (state_dict of torch tensors, manifest dict)."""
    path = Path(path)
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint format {manifest.get('format_version')!r} in {path}"
            )
        state = {}
        for name in manifest["tensor_names"]:
            arr = np.lib.format.read_array(io.BytesIO(zf.read(f"tensors/{name}.npy")))
            state[name] = torch.from_numpy(arr.copy())
    return state, manifest


def load_into(model: torch.nn.Module, path) -> dict:
    """Load a checkpoint into a model in place; returns the manifest."""
    state, manifest = load_checkpoint(path)
    model.load_state_dict(state)
    return manifest
