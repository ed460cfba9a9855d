"""Shared fixtures: tiny synthetic datasets and seeded generators."""

import numpy as np
import pytest

from particle.data import ManifestDataset, SynthSpec, generate_synthetic


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """24 images, 3 classes: enough for plumbing tests, fast to build."""
    root = tmp_path_factory.mktemp("tiny_data")
    spec = SynthSpec(n_classes=3, n_images=24, image_side=64, clutter=0.3, seed=11)
    manifest = generate_synthetic(spec, root)
    return ManifestDataset(manifest)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
