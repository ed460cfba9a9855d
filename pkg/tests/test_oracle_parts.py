"""oracle_segmentation against brute-force nearest-keypoint assignment."""

import numpy as np
import pytest

from particle.discovery import oracle_segmentation
from particle.discovery.types import Keypoint, KeypointAnnotation


def brute_force_voronoi(points, mask):
    """Per-pixel loop over keypoints; ties go to the lowest point index."""
    h, w = mask.shape
    labels = np.full((h, w), len(points), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            best, best_d = 0, np.inf
            for i, (px, py) in enumerate(points):
                d = (x - px) ** 2 + (y - py) ** 2
                if d < best_d:
                    best, best_d = i, d
            labels[y, x] = best
    return labels


def test_matches_brute_force_on_random_annotations(rng):
    for trial in range(10):
        h = int(rng.integers(6, 18))
        w = int(rng.integers(6, 18))
        mask = rng.uniform(size=(h, w)) < 0.7
        mask[h // 2, w // 2] = True  # never empty
        n_pts = int(rng.integers(1, 6))
        pts = [(float(rng.uniform(0, w - 1)), float(rng.uniform(0, h - 1)))
               for _ in range(n_pts)]
        ann = KeypointAnnotation(
            points=[Keypoint(f"p{i}", x, y) for i, (x, y) in enumerate(pts)],
            foreground_mask=mask)
        seg = oracle_segmentation(ann, "voronoi_keypoints")
        ref = brute_force_voronoi(pts, mask)
        assert np.array_equal(seg.labels, ref), f"trial {trial}"
        assert seg.k == n_pts + 1


def test_single_keypoint_full_foreground():
    mask = np.ones((8, 8), dtype=bool)
    ann = KeypointAnnotation(points=[Keypoint("only", 3.0, 3.0)],
                             foreground_mask=mask)
    seg = oracle_segmentation(ann, "voronoi_keypoints")
    assert np.all(seg.labels == 0)
    assert seg.k == 2  # background label reserved even when unused


def test_midline_ties_go_to_lowest_index():
    h, w = 9, 9
    mask = np.ones((h, w), dtype=bool)
    ann = KeypointAnnotation(
        points=[Keypoint("left", 0.0, 4.0), Keypoint("right", 8.0, 4.0)],
        foreground_mask=mask)
    seg = oracle_segmentation(ann, "voronoi_keypoints")
    assert np.all(seg.labels[:, :4] == 0)
    assert np.all(seg.labels[:, 5:] == 1)
    assert np.all(seg.labels[:, 4] == 0)  # equidistant column


def test_invisible_keypoints_are_skipped():
    mask = np.ones((6, 6), dtype=bool)
    ann = KeypointAnnotation(
        points=[Keypoint("gone", 0.0, 0.0, visible=False),
                Keypoint("here", 3.0, 3.0)],
        foreground_mask=mask)
    seg = oracle_segmentation(ann, "voronoi_keypoints")
    assert np.all(seg.labels == 0)  # "here" is visible index 0
    assert seg.k == 2


def test_background_pixels_share_one_label():
    mask = np.zeros((6, 6), dtype=bool)
    mask[2:4, 2:4] = True
    ann = KeypointAnnotation(points=[Keypoint("a", 2.0, 2.0)],
                             foreground_mask=mask)
    seg = oracle_segmentation(ann, "voronoi_keypoints")
    assert np.all(seg.labels[~mask] == 1)
    assert np.all(seg.labels[mask] == 0)


def test_figure_ground_is_identity_on_disk():
    yy, xx = np.mgrid[0:16, 0:16]
    mask = (xx - 8) ** 2 + (yy - 8) ** 2 <= 25
    ann = KeypointAnnotation(points=[], foreground_mask=mask)
    seg = oracle_segmentation(ann, "figure_ground")
    assert np.array_equal(seg.labels, mask.astype(np.int32))
    assert seg.k == 2


def test_voronoi_errors():
    mask = np.ones((4, 4), dtype=bool)
    with pytest.raises(ValueError, match="visible keypoint"):
        oracle_segmentation(KeypointAnnotation(points=[], foreground_mask=mask),
                            "voronoi_keypoints")
    empty = np.zeros((4, 4), dtype=bool)
    with pytest.raises(ValueError, match="foreground"):
        oracle_segmentation(
            KeypointAnnotation(points=[Keypoint("a", 1.0, 1.0)],
                               foreground_mask=empty),
            "voronoi_keypoints")
    with pytest.raises(ValueError, match="unknown oracle mode"):
        oracle_segmentation(
            KeypointAnnotation(points=[Keypoint("a", 1.0, 1.0)],
                               foreground_mask=mask),
            "nearest")


def test_out_of_bounds_visible_keypoint_rejected():
    mask = np.ones((4, 4), dtype=bool)
    with pytest.raises(ValueError, match="outside"):
        KeypointAnnotation(points=[Keypoint("far", 9.0, 1.0)],
                           foreground_mask=mask)
