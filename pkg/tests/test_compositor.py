import numpy as np
import pytest

from shadecomp.compositor import (
    CompositeInputs,
    align_object_depth,
    color_balance_factor,
    compose_pipeline,
    composite_intrinsics,
    final_composite,
    fit_footprint_affine,
    shadow_opacity_ratio,
)
from shadecomp.intrinsics import reconstruct_image
from shadecomp.masks import MaskParams
from shadecomp.render import AnalyticRenderer, LightSpec
from tests.conftest import make_flat_bundle


def _mask_like(bundle, value=0.0):
    h, w = bundle.shape
    return np.full((h, w, 1), value, dtype=np.float32)


# ---------------------------------------------------------------------------
# Footprint affine fit
# ---------------------------------------------------------------------------


def test_fit_two_point_exact():
    obj = np.zeros((3, 2, 1), dtype=np.float32)
    bg = np.zeros((3, 2, 1), dtype=np.float32)
    obj[2, 0, 0], obj[2, 1, 0] = 2.0, 4.0
    bg[2, 0, 0], bg[2, 1, 0] = 1.0, 2.0
    obj[obj == 0] = 5.0
    bg[bg == 0] = 5.0
    mask = np.zeros((3, 2, 1), dtype=np.float32)
    mask[2, :, 0] = 1.0
    a, b = fit_footprint_affine(obj, bg, mask)
    assert abs(a - 0.5) < 1e-9
    assert abs(b) < 1e-9


def test_fit_identity_when_depths_agree():
    rng = np.random.default_rng(0)
    depth = (1.0 + 2.0 * rng.random((6, 20, 1))).astype(np.float32)
    mask = np.zeros((6, 20, 1), dtype=np.float32)
    mask[4, :, 0] = 1.0
    a, b = fit_footprint_affine(depth, depth, mask)
    assert abs(a - 1.0) < 1e-6
    assert abs(b) < 1e-6


def test_fit_single_footprint_pixel_is_pure_offset():
    obj = np.full((4, 4, 1), 2.0, dtype=np.float32)
    bg = np.full((4, 4, 1), 3.5, dtype=np.float32)
    mask = np.zeros((4, 4, 1), dtype=np.float32)
    mask[2, 1, 0] = 1.0
    a, b = fit_footprint_affine(obj, bg, mask)
    assert a == 1.0
    assert abs(b - 1.5) < 1e-6


def test_fit_recovers_planted_affine_under_noise():
    rng = np.random.default_rng(42)
    ok = 0
    for trial in range(50):
        n = 40
        x = 1.0 + 3.0 * rng.random(n)
        a_true = 0.5 + rng.random()
        b_true = rng.uniform(-0.5, 0.5)
        y = a_true * x + b_true + rng.normal(0, 0.01, n)
        obj = np.zeros((2, n, 1), dtype=np.float32)
        bg = np.zeros((2, n, 1), dtype=np.float32)
        obj[1, :, 0] = x
        bg[1, :, 0] = y
        obj[0] = bg[0] = 1.0
        mask = np.zeros((2, n, 1), dtype=np.float32)
        mask[1, :, 0] = 1.0
        a, b = fit_footprint_affine(obj, bg, mask)
        if abs(a - a_true) < 0.05 and abs(b - b_true) < 0.05:
            ok += 1
    assert ok == 50


def test_fit_residual_never_exceeds_identity():
    rng = np.random.default_rng(10)
    for trial in range(20):
        n = 25
        x = (1.0 + 3.0 * rng.random(n)).astype(np.float64)
        y = x + rng.normal(0, 0.2, n)
        obj = np.zeros((2, n, 1), dtype=np.float32)
        bg = np.zeros((2, n, 1), dtype=np.float32)
        obj[1, :, 0] = x
        bg[1, :, 0] = y
        obj[0] = bg[0] = 1.0
        mask = np.zeros((2, n, 1), dtype=np.float32)
        mask[1, :, 0] = 1.0
        a, b = fit_footprint_affine(obj, bg, mask)
        xf = obj[1, :, 0].astype(np.float64)
        yf = bg[1, :, 0].astype(np.float64)
        assert np.sum((a * xf + b - yf) ** 2) <= np.sum((xf - yf) ** 2) + 1e-9


def test_fit_empty_mask_raises():
    z = np.ones((3, 3, 1), dtype=np.float32)
    with pytest.raises(ValueError):
        fit_footprint_affine(z, z, np.zeros_like(z))


def test_align_applies_affine_to_full_map():
    obj = np.full((3, 3, 1), 2.0, dtype=np.float32)
    bg = np.full((3, 3, 1), 3.0, dtype=np.float32)
    mask = np.zeros((3, 3, 1), dtype=np.float32)
    mask[2, 1, 0] = 1.0
    aligned = align_object_depth(obj, bg, mask)
    assert np.abs(aligned - 3.0).max() < 1e-6


# ---------------------------------------------------------------------------
# Layer compositing
# ---------------------------------------------------------------------------


def test_composite_all_background():
    bg = make_flat_bundle(albedo=0.6, shading=0.9)
    obj = make_flat_bundle(albedo=0.2, shading=0.1)
    obj.shading = None
    comp, mask = composite_intrinsics(CompositeInputs(bg, obj, _mask_like(bg, 0.0)))
    assert np.array_equal(comp.albedo, bg.albedo)
    assert np.array_equal(comp.normals, bg.normals)
    assert np.array_equal(comp.depth, bg.depth)
    assert np.array_equal(comp.shading, bg.shading)
    assert (mask == 1.0).all()


def test_composite_all_object():
    bg = make_flat_bundle(albedo=0.6, shading=0.9, depth=2.0)
    obj = make_flat_bundle(albedo=0.2, shading=0.1, depth=2.0)
    obj.shading = None
    comp, mask = composite_intrinsics(CompositeInputs(bg, obj, _mask_like(bg, 1.0)))
    assert np.array_equal(comp.albedo, obj.albedo)
    assert np.array_equal(comp.normals, obj.normals)
    assert np.abs(comp.depth - obj.depth).max() < 1e-6
    assert (mask == 0.0).all()
    assert (comp.shading == 0.0).all()  # unknown shading carries the zero fill


def test_composite_fractional_pixel_midpoint_albedo():
    bg = make_flat_bundle(albedo=0.6, shading=0.9)
    obj = make_flat_bundle(albedo=0.2, shading=0.1)
    obj.shading = None
    m = _mask_like(bg, 0.0)
    m[8, 8, 0] = 0.5
    m[9, 9, 0] = 1.0  # anchor so the footprint fit has data
    comp, _ = composite_intrinsics(CompositeInputs(bg, obj, m))
    assert np.abs(comp.albedo[8, 8] - 0.4).max() < 1e-6
    norms = np.linalg.norm(comp.normals, axis=2)
    assert np.abs(norms - 1.0).max() < 1e-3


def test_composite_blend_swap_symmetry():
    # Blending A over B with mask m equals B over A with 1-m (checked on
    # albedo/normals with shared depth so alignment cannot interfere).
    rng = np.random.default_rng(3)
    bg_a = make_flat_bundle(albedo=0.7, shading=1.0)
    bg_b = make_flat_bundle(albedo=0.3, shading=1.0)
    obj_a = make_flat_bundle(albedo=0.7, shading=1.0)
    obj_b = make_flat_bundle(albedo=0.3, shading=1.0)
    obj_a.shading = None
    obj_b.shading = None
    m = (rng.random((16, 16, 1)) > 0.5).astype(np.float32)
    if not m.any():
        m[0, 0, 0] = 1.0
    comp1, _ = composite_intrinsics(CompositeInputs(bg_a, obj_b, m))
    comp2, _ = composite_intrinsics(CompositeInputs(bg_b, obj_a, 1.0 - m))
    assert np.allclose(comp1.albedo, comp2.albedo, atol=1e-7)
    assert np.allclose(comp1.normals, comp2.normals, atol=1e-7)


# ---------------------------------------------------------------------------
# Opacity ratio, color balance, final blend
# ---------------------------------------------------------------------------


def test_ratio_identical_renders():
    img = np.random.default_rng(1).random((8, 8, 3)).astype(np.float32) + 0.1
    mask = np.zeros((8, 8, 1), dtype=np.float32)
    r = shadow_opacity_ratio(img, img, mask)
    assert np.abs(r - 1.0).max() == 0.0


def test_ratio_direct_and_clamped():
    mask = np.zeros((1, 2, 1), dtype=np.float32)
    comp = np.zeros((1, 2, 3), dtype=np.float32)
    bg = np.zeros((1, 2, 3), dtype=np.float32)
    comp[0, 0] = 0.3
    bg[0, 0] = 0.6
    comp[0, 1] = 0.9
    bg[0, 1] = 0.6
    r = shadow_opacity_ratio(comp, bg, mask)
    assert abs(r[0, 0, 0] - 0.5) < 1e-6
    assert r[0, 1, 0] == 1.0  # 1.5 clamped


def test_ratio_forced_to_one_outside_masked_region():
    comp = np.full((4, 4, 3), 0.2, dtype=np.float32)
    bg = np.full((4, 4, 3), 0.8, dtype=np.float32)
    mask = np.ones((4, 4, 1), dtype=np.float32)
    mask[0, 0, 0] = 0.0
    r = shadow_opacity_ratio(comp, bg, mask)
    assert abs(r[0, 0, 0] - 0.25) < 1e-6
    assert (r[1:] == 1.0).all()


def test_color_balance_identity_and_scale():
    rng = np.random.default_rng(2)
    bg = (0.2 + 0.5 * rng.random((10, 10, 3))).astype(np.float32)
    mask = np.zeros((10, 10, 1), dtype=np.float32)
    mask[0, 0, 0] = 1.0
    assert np.abs(color_balance_factor(bg, bg, mask) - 1.0).max() < 1e-6
    assert np.abs(color_balance_factor(bg, 2.0 * bg, mask) - 0.5).max() < 1e-6


def test_color_balance_matches_brute_force():
    rng = np.random.default_rng(5)
    bg = (0.1 + 0.8 * rng.random((12, 12, 3))).astype(np.float32)
    render = (0.1 + 0.8 * rng.random((12, 12, 3))).astype(np.float32)
    mask = (rng.random((12, 12, 1)) > 0.7).astype(np.float32)
    c = color_balance_factor(bg, render, mask)
    sel = mask[:, :, 0] < 0.5
    expected = np.clip(
        bg[sel].mean(axis=0, dtype=np.float64) / render[sel].mean(axis=0, dtype=np.float64),
        0.25,
        4.0,
    )
    assert np.abs(c - expected).max() < 1e-6


def test_color_balance_rejects_all_object():
    img = np.ones((4, 4, 3), dtype=np.float32)
    with pytest.raises(ValueError):
        color_balance_factor(img, img, np.ones((4, 4, 1), dtype=np.float32))


def test_final_composite_background_fidelity():
    rng = np.random.default_rng(7)
    bg = rng.random((6, 6, 3)).astype(np.float32)
    render = rng.random((6, 6, 3)).astype(np.float32)
    ones_ratio = np.ones((6, 6, 1), dtype=np.float32)
    zeros_mask = np.zeros((6, 6, 1), dtype=np.float32)
    out = final_composite(bg, render, ones_ratio, zeros_mask, np.ones(3, dtype=np.float32))
    assert np.array_equal(out, bg)


def test_final_composite_object_side():
    rng = np.random.default_rng(8)
    bg = rng.random((4, 4, 3)).astype(np.float32)
    render = rng.random((4, 4, 3)).astype(np.float32)
    c = np.array([1.1, 0.9, 1.0], dtype=np.float32)
    out = final_composite(
        bg, render, np.ones((4, 4, 1), np.float32), np.ones((4, 4, 1), np.float32), c
    )
    assert np.allclose(out, c[None, None, :] * render, atol=1e-7)


def test_final_composite_pure_shadow_darkening():
    bg = np.full((3, 3, 3), 0.8, dtype=np.float32)
    out = final_composite(
        bg,
        np.zeros_like(bg),
        np.full((3, 3, 1), 0.5, np.float32),
        np.zeros((3, 3, 1), np.float32),
        np.ones(3, np.float32),
    )
    assert np.abs(out - 0.4).max() < 1e-7


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def _pipeline_inputs(scene):
    return CompositeInputs(
        bg=scene.bundle_bg,
        obj=scene.bundle_obj,
        object_mask=scene.object_mask,
        params=MaskParams(),
    )


def test_pipeline_empty_mask_returns_background(box_scene):
    bg = box_scene.bundle_bg
    obj = box_scene.bundle_obj
    inputs = CompositeInputs(bg, obj, np.zeros((bg.shape[0], bg.shape[1], 1), np.float32))
    out = compose_pipeline(inputs, AnalyticRenderer(box_scene.spec.light))
    assert np.array_equal(out, reconstruct_image(bg.albedo, bg.shading))


def test_pipeline_deterministic(box_scene):
    renderer = AnalyticRenderer(box_scene.spec.light)
    a = compose_pipeline(_pipeline_inputs(box_scene), renderer, seed=469)
    b = compose_pipeline(_pipeline_inputs(box_scene), renderer, seed=469)
    assert a.tobytes() == b.tobytes()


def test_pipeline_preserves_untouched_background(box_scene):
    renderer = AnalyticRenderer(box_scene.spec.light)
    res = compose_pipeline(_pipeline_inputs(box_scene), renderer, return_intermediates=True)
    untouched = (res.feathered_mask[:, :, 0] == 0.0) & (res.shading_mask[:, :, 0] >= 0.5)
    assert untouched.sum() > 0
    assert np.array_equal(res.composite[untouched], res.x_bg[untouched])


def test_pipeline_ratio_in_range(box_scene):
    renderer = AnalyticRenderer(box_scene.spec.light)
    res = compose_pipeline(_pipeline_inputs(box_scene), renderer, return_intermediates=True)
    assert res.ratio.min() >= 0.0 and res.ratio.max() <= 1.0
    outside = res.shading_mask[:, :, 0] >= 0.5
    assert (res.ratio[:, :, 0][outside] == 1.0).all()


def test_pipeline_surfaces_renderer_failure(box_scene):
    class Exploding:
        renderer_id = "boom"

        def render(self, bundle, seed=469):
            raise RuntimeError("no such renderer backend")

    with pytest.raises(RuntimeError, match="composited bundle"):
        compose_pipeline(_pipeline_inputs(box_scene), Exploding())


def test_composite_inputs_validation(box_scene):
    small = make_flat_bundle(width=4, height=4)
    with pytest.raises(Exception):
        CompositeInputs(box_scene.bundle_bg, small, box_scene.object_mask)


def test_light_spec_validation():
    with pytest.raises(ValueError):
        LightSpec(direction=(1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        LightSpec(direction=(0.0, -1.0, 0.0), intensity=(-1.0, 0.0, 0.0))
