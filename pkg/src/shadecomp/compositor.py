"""Intrinsic-layer compositing and differential blending.

The pipeline: align the object's footprint depth to the background, blend
every intrinsic channel with the object mask, mask the background shading
around the object, render the composited and background bundles with the
same seed and the same shading mask, form the per-pixel shadow-opacity
ratio of the two renders, and blend

    out = (1 - m) * R * x_bg + m * C * render_comp

with m the feathered object mask and C a scalar-per-channel color balance.
Outside the masked shading region R is forced to 1, so untouched background
pixels survive bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .imaging import MapShapeError, as_float_map, to_grayscale
from .intrinsics import IntrinsicBundle, reconstruct_image
from .masks import MaskParams, build_inference_shading_mask, feather_object_mask
from .render import DEFAULT_SEED, Renderer

#: Denominator guard for the opacity ratio.
RATIO_EPS = 1e-4

#: Robustness clamp on the per-channel color balance factor.
COLOR_BALANCE_RANGE = (0.25, 4.0)

#: Minimum fraction of background pixels required for a color balance.
_MIN_BG_FRACTION = 0.01


@dataclass
class CompositeInputs:
    """Everything the pipeline needs: background bundle, object bundle
    (shading unknown), binary object mask, and the mask parameters."""

    bg: IntrinsicBundle
    obj: IntrinsicBundle
    object_mask: np.ndarray
    params: MaskParams = MaskParams()

    def __post_init__(self):
        self.object_mask = as_float_map(self.object_mask, name="object_mask")
        if self.bg.shape != self.obj.shape:
            raise MapShapeError(f"bg {self.bg.shape} vs obj {self.obj.shape}")
        if self.object_mask.shape[:2] != self.bg.shape:
            raise MapShapeError(
                f"object_mask {self.object_mask.shape[:2]} vs maps {self.bg.shape}"
            )
        if self.bg.shading is None:
            raise ValueError("background bundle must carry shading")


def fit_footprint_affine(obj_depth, bg_depth, object_mask) -> tuple[float, float]:
    """Least-squares (a, b) so that a * obj_depth + b matches bg_depth on the
    object footprint.

    The footprint is the lowest masked pixel of each image column (the
    contact boundary, where object and background depth must agree).  A
    single footprint pixel, or constant object depth, degenerates to a pure
    offset (a = 1).
    """
    od = as_float_map(obj_depth, name="obj_depth")[:, :, 0]
    bd = as_float_map(bg_depth, name="bg_depth")[:, :, 0]
    m = as_float_map(object_mask, name="object_mask")[:, :, 0] >= 0.5
    if od.shape != bd.shape or od.shape != m.shape:
        raise MapShapeError("depth maps and mask must share dimensions")
    cols = np.nonzero(m.any(axis=0))[0]
    if cols.size == 0:
        raise ValueError("object mask is empty: no footprint")
    h = m.shape[0]
    rows = (h - 1) - np.argmax(m[::-1, :][:, cols], axis=0)
    x = od[rows, cols].astype(np.float64)
    y = bd[rows, cols].astype(np.float64)
    n = x.size
    # A scale is only identifiable when the footprint spans a usable depth
    # range (a flat or point contact makes the normal equations explode);
    # degenerate fits fall back to the least-squares pure offset.
    spread = float(x.max() - x.min())
    if n < 2 or spread < 0.02 * max(float(np.median(x)), 1e-9):
        return 1.0, float((y - x).mean())
    sx, sy = x.sum(), y.sum()
    sxx, sxy = (x * x).sum(), (x * y).sum()
    det = n * sxx - sx * sx
    if det <= 1e-12 * max(n * sxx, 1.0):
        return 1.0, float((y - x).mean())
    a = (n * sxy - sx * sy) / det
    b = (sy - a * sx) / n
    return float(a), float(b)


def align_object_depth(obj_depth, bg_depth, object_mask) -> np.ndarray:
    """Apply the footprint-fitted affine transform to the object depth map."""
    a, b = fit_footprint_affine(obj_depth, bg_depth, object_mask)
    od = as_float_map(obj_depth, name="obj_depth")
    return (od.astype(np.float64) * a + b).astype(np.float32)


def composite_intrinsics(
    inputs: CompositeInputs,
) -> tuple[IntrinsicBundle, np.ndarray]:
    """Blend object over background per channel: m * obj + (1 - m) * bg.

    The object depth is footprint-aligned first.  Composite normals are
    re-normalized where the mask is fractional.  The shading channel keeps
    the background shading with the inference shading mask applied (masked
    pixels zeroed); the mask itself, not the fill value, is what renderers
    must honor.  Returns the composited bundle and the shading mask.
    """
    bg, obj = inputs.bg, inputs.obj
    m = inputs.object_mask
    has_object = bool(np.any(m >= 0.5))

    if has_object:
        aligned = align_object_depth(obj.depth, bg.depth, m)
    else:
        aligned = obj.depth
    depth = m * aligned + (1.0 - m) * bg.depth

    normals = m * obj.normals + (1.0 - m) * bg.normals
    frac = (m[:, :, 0] > 0.0) & (m[:, :, 0] < 1.0)
    if frac.any():
        norms = np.linalg.norm(normals[frac], axis=1, keepdims=True)
        normals[frac] = np.where(norms > 1e-8, normals[frac] / norms, (0.0, 0.0, -1.0))

    albedo = np.clip(m * obj.albedo + (1.0 - m) * bg.albedo, 0.0, 1.0)

    extras = {}
    for name in ("roughness", "metallic"):
        bg_map, obj_map = getattr(bg, name), getattr(obj, name)
        if bg_map is not None and obj_map is not None:
            extras[name] = m * obj_map + (1.0 - m) * bg_map

    if has_object:
        shading_mask = build_inference_shading_mask(m, depth, bg.camera, inputs.params)
    else:
        shading_mask = np.ones((bg.shape[0], bg.shape[1], 1), dtype=np.float32)

    comp = IntrinsicBundle(
        depth=depth,
        normals=normals,
        albedo=albedo,
        shading=bg.shading * shading_mask,
        shading_mask=shading_mask,
        camera=bg.camera,
        **extras,
    )
    return comp, shading_mask


def shadow_opacity_ratio(render_comp, render_bg, shading_mask) -> np.ndarray:
    """Grayscale ratio of the two renders, clamped to [0, 1].

    R = clamp(gray(render_comp) / max(gray(render_bg), eps), 0, 1), forced to
    1 wherever the shading mask kept the pixel (mask 1): opacity there would
    be renderer noise, not an object effect.  Both renders must come from the
    same seed and the same shading mask.
    """
    gc = to_grayscale(render_comp)
    gb = to_grayscale(render_bg)
    mask = as_float_map(shading_mask, name="shading_mask")
    if gc.shape != gb.shape or gc.shape != mask.shape:
        raise MapShapeError("renders and shading mask must share dimensions")
    ratio = np.clip(gc / np.maximum(gb, RATIO_EPS), 0.0, 1.0)
    return np.where(mask >= 0.5, np.float32(1.0), ratio).astype(np.float32)


def color_balance_factor(x_bg, render_comp, object_mask) -> np.ndarray:
    """Per-channel mean color ratio of the real background to the composite
    render, over background pixels (mask < 0.5); clamped to [0.25, 4]."""
    bg = as_float_map(x_bg, name="x_bg")
    rc = as_float_map(render_comp, name="render_comp")
    m = as_float_map(object_mask, name="object_mask")
    if bg.shape != rc.shape or bg.shape[:2] != m.shape[:2]:
        raise MapShapeError("images and mask must share dimensions")
    sel = m[:, :, 0] < 0.5
    if sel.sum() < _MIN_BG_FRACTION * m[:, :, 0].size:
        raise ValueError("background region too small for a color balance estimate")
    num = bg[sel].mean(axis=0, dtype=np.float64)
    den = np.maximum(rc[sel].mean(axis=0, dtype=np.float64), RATIO_EPS)
    return np.clip(num / den, *COLOR_BALANCE_RANGE).astype(np.float32)


def final_composite(x_bg, render_comp, ratio, feathered_mask, color_balance) -> np.ndarray:
    """Blend: (1 - m) * R * x_bg + m * C * render_comp, clamped to >= 0."""
    bg = as_float_map(x_bg, name="x_bg")
    rc = as_float_map(render_comp, name="render_comp")
    r = as_float_map(ratio, name="ratio")
    m = as_float_map(feathered_mask, name="feathered_mask")
    c = np.asarray(color_balance, dtype=np.float32).reshape(1, 1, 3)
    if bg.shape != rc.shape or bg.shape[:2] != r.shape[:2] or bg.shape[:2] != m.shape[:2]:
        raise MapShapeError("final composite inputs must share dimensions")
    out = (1.0 - m) * r * bg + m * c * rc
    return np.maximum(out, 0.0).astype(np.float32)


@dataclass
class PipelineResult:
    """Final composite plus every intermediate worth inspecting."""

    composite: np.ndarray
    x_bg: np.ndarray
    render_comp: np.ndarray
    render_bg: np.ndarray
    ratio: np.ndarray
    shading_mask: np.ndarray
    comp_bundle: IntrinsicBundle
    color_balance: np.ndarray
    feathered_mask: np.ndarray


def compose_pipeline(
    inputs: CompositeInputs,
    renderer: Renderer,
    seed: int = DEFAULT_SEED,
    return_intermediates: bool = False,
):
    """Run the full compositing pipeline, deterministic given (inputs, seed).

    With an empty object mask the shading mask is all-ones and the output
    equals the reconstructed background exactly.
    """
    bg = inputs.bg
    x_bg = reconstruct_image(bg.albedo, bg.shading)
    comp_bundle, shading_mask = composite_intrinsics(inputs)
    bg_masked = replace(
        bg, shading=bg.shading * shading_mask, shading_mask=shading_mask
    )
    try:
        render_comp = renderer.render(comp_bundle, seed=seed)
    except Exception as exc:
        raise RuntimeError(f"renderer failed on the composited bundle: {exc}") from exc
    try:
        render_bg = renderer.render(bg_masked, seed=seed)
    except Exception as exc:
        raise RuntimeError(f"renderer failed on the background bundle: {exc}") from exc

    ratio = shadow_opacity_ratio(render_comp, render_bg, shading_mask)
    balance = color_balance_factor(x_bg, render_comp, inputs.object_mask)
    feathered = feather_object_mask(inputs.object_mask)
    composite = final_composite(x_bg, render_comp, ratio, feathered, balance)
    if not return_intermediates:
        return composite
    return PipelineResult(
        composite=composite,
        x_bg=x_bg,
        render_comp=render_comp,
        render_bg=render_bg,
        ratio=ratio,
        shading_mask=shading_mask,
        comp_bundle=comp_bundle,
        color_balance=balance,
        feathered_mask=feathered,
    )
