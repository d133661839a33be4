import numpy as np
import pytest

from shadecomp.imaging import gaussian_blur
from shadecomp.intrinsics import CameraModel, unproject_depth
from shadecomp.masks import (
    FEATHER_KERNEL,
    FEATHER_SIGMA,
    MaskParams,
    build_inference_shading_mask,
    feather_object_mask,
    sample_training_mask,
)


def _classify(mask):
    if (mask == 0).all():
        return "zeros"
    if (mask == 1).all():
        return "ones"
    return "shapes"


# ---------------------------------------------------------------------------
# Training mask sampler
# ---------------------------------------------------------------------------


def test_training_mask_deterministic():
    a = sample_training_mask(40, 30, seed=123)
    b = sample_training_mask(40, 30, seed=123)
    assert np.array_equal(a, b)
    # different seeds must be able to produce different masks
    others = [sample_training_mask(40, 30, seed=s) for s in range(20)]
    assert any(not np.array_equal(a, o) for o in others)


def test_training_mask_binary():
    for seed in range(25):
        m = sample_training_mask(21, 17, seed)
        assert set(np.unique(m)) <= {0.0, 1.0}
        assert m.shape == (17, 21, 1)


def test_training_mask_branch_frequencies():
    # Monte-Carlo check of the 0.6 / 0.3 / 0.1 split over 4000 draws; the
    # tighter 10k-draw chi-squared version lives in the acceptance suite.
    counts = {"shapes": 0, "zeros": 0, "ones": 0}
    n = 4000
    for seed in range(n):
        counts[_classify(sample_training_mask(12, 12, seed))] += 1
    assert abs(counts["shapes"] / n - 0.6) < 0.03
    assert abs(counts["zeros"] / n - 0.3) < 0.03
    assert abs(counts["ones"] / n - 0.1) < 0.03


def test_training_mask_rejects_empty():
    with pytest.raises(ValueError):
        sample_training_mask(0, 4, 1)


# ---------------------------------------------------------------------------
# Inference shading mask
# ---------------------------------------------------------------------------


def _flat_depth_setup(size=16, depth=2.0):
    cam = CameraModel(width=size, height=size, fov_deg=50.0)
    d = np.full((size, size, 1), depth, dtype=np.float32)
    return cam, d


def test_zero_height_object_masks_only_itself():
    cam, depth = _flat_depth_setup()
    mask = np.zeros((16, 16, 1), dtype=np.float32)
    mask[8, 4:9, 0] = 1.0  # one row: identical y for constant depth
    s = build_inference_shading_mask(mask, depth, cam, MaskParams())
    masked = s[:, :, 0] < 0.5
    assert np.array_equal(masked, mask[:, :, 0] >= 0.5)


def test_single_pixel_object():
    cam, depth = _flat_depth_setup()
    mask = np.zeros((16, 16, 1), dtype=np.float32)
    mask[7, 7, 0] = 1.0
    s = build_inference_shading_mask(mask, depth, cam, MaskParams())
    assert (s[:, :, 0] < 0.5).sum() == 1
    assert s[7, 7, 0] == 0.0


def test_object_pixels_always_masked(box_scene):
    s = build_inference_shading_mask(
        box_scene.object_mask, box_scene.bundle_full.depth, box_scene.spec.camera, MaskParams()
    )
    obj = box_scene.object_mask[:, :, 0] >= 0.5
    assert (s[:, :, 0][obj] == 0).all()


def test_inference_mask_matches_brute_force(box_scene):
    """Exhaustive nearest-neighbor distance oracle, exact set equality."""
    cam = box_scene.spec.camera
    depth = box_scene.bundle_full.depth
    params = MaskParams()
    s = build_inference_shading_mask(box_scene.object_mask, depth, cam, params)

    positions = unproject_depth(depth, cam).astype(np.float64)
    m = box_scene.object_mask[:, :, 0] >= 0.5
    pts = positions[m]
    up = np.asarray(cam.up, dtype=np.float64)
    up_coord = positions @ up
    obj_up = up_coord[m]
    d = params.shading_radius * (obj_up.max() - obj_up.min())

    flat = positions.reshape(-1, 3)
    dists = np.sqrt(((flat[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    masked = dists.reshape(m.shape) <= d

    h1 = positions[:, :, 0]
    h2 = positions[:, :, 2]
    o1, o2 = h1[m], h2[m]
    above = (
        (h1 >= o1.min())
        & (h1 <= o1.max())
        & (h2 >= o2.min())
        & (h2 <= o2.max())
        & (up_coord > obj_up.max())
    )
    masked &= ~above
    masked |= m
    assert np.array_equal(s[:, :, 0] < 0.5, masked)


def test_mask_monotone_in_radius(box_scene):
    masks = [
        build_inference_shading_mask(
            box_scene.object_mask,
            box_scene.bundle_full.depth,
            box_scene.spec.camera,
            MaskParams(shading_radius=lam),
        )
        for lam in (0.5, 1.0, 1.5)
    ]
    small, mid, large = (m[:, :, 0] < 0.5 for m in masks)
    assert small[mid].size == mid.size or (small & ~mid).sum() == 0
    assert (small & ~mid).sum() == 0
    assert (mid & ~large).sum() == 0
    assert small.sum() < large.sum()


def test_directly_above_exception():
    # Constant-depth wall: pixels straight above the object share its (x, z)
    # footprint, so they must stay unmasked however close they are.
    cam, depth = _flat_depth_setup(size=24, depth=2.0)
    mask = np.zeros((24, 24, 1), dtype=np.float32)
    mask[14:18, 10:14, 0] = 1.0
    s = build_inference_shading_mask(mask, depth, cam, MaskParams())
    above = s[10:14, 10:14, 0]
    assert (above == 1.0).all()
    beside = s[14:18, 8:10, 0]
    assert (beside == 0.0).all()


def test_empty_mask_rejected():
    cam, depth = _flat_depth_setup()
    with pytest.raises(ValueError):
        build_inference_shading_mask(np.zeros((16, 16, 1), np.float32), depth, cam)


def test_inference_mask_deterministic(box_scene):
    args = (box_scene.object_mask, box_scene.bundle_full.depth, box_scene.spec.camera)
    assert np.array_equal(
        build_inference_shading_mask(*args, MaskParams()),
        build_inference_shading_mask(*args, MaskParams()),
    )


def test_mask_params_validation():
    with pytest.raises(ValueError):
        MaskParams(shading_radius=0.0)
    assert MaskParams().shading_radius == 1.0
    assert MaskParams().seed == 469


# ---------------------------------------------------------------------------
# Feathering
# ---------------------------------------------------------------------------


def test_feather_constants():
    assert (FEATHER_KERNEL, FEATHER_SIGMA) == (15, 1.5)


def test_feather_all_ones_stays_ones():
    m = np.ones((20, 20, 1), dtype=np.float32)
    out = feather_object_mask(m)
    assert np.abs(out - 1.0).max() < 1e-6


def test_feather_matches_standard_blur():
    rng = np.random.default_rng(8)
    m = (rng.random((24, 24, 1)) > 0.5).astype(np.float32)
    assert np.allclose(
        feather_object_mask(m), np.clip(gaussian_blur(m, 15, 1.5), 0, 1), atol=1e-7
    )


def test_feather_disk_interior_and_band():
    size = 64
    yy, xx = np.mgrid[0:size, 0:size]
    disk = (((xx - 32) ** 2 + (yy - 32) ** 2) <= 20**2).astype(np.float32)
    out = feather_object_mask(disk[:, :, np.newaxis])[:, :, 0]
    assert np.abs(out[28:37, 28:37] - 1.0).max() < 1e-6
    row = out[32]
    band = np.nonzero((row > 1e-6) & (row < 1 - 1e-6))[0]
    left_band = band[band < 32]
    assert 2 <= left_band.size <= 15  # transition confined to the kernel extent
