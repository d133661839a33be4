"""Shading-mask generation and object-mask feathering.

Mask polarity, everywhere in this package: 1 means the shading at that pixel
is KNOWN and kept; 0 means it is unknown and must be synthesized by the
renderer.  Training masks are random; the inference mask is fully determined
by the object geometry (no randomness).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .imaging import as_float_map, gaussian_blur
from .intrinsics import CameraModel, unproject_depth

#: Gaussian feathering applied to the object mask before final blending.
FEATHER_KERNEL = 15
FEATHER_SIGMA = 1.5

# Random-shape sampler configuration.  The shape count and size range span
# local-to-global occlusion; treat these as tunable configuration.
_SHAPE_BRANCH_P = 0.6
_REMOVE_ALL_P = 0.3
_MIN_SHAPES = 1
_MAX_SHAPES = 5
_SPAN_FRAC_LO = 0.10
_SPAN_FRAC_HI = 0.50


@dataclass(frozen=True)
class MaskParams:
    """Inference-mask knobs: relative shading radius and the run seed."""

    shading_radius: float = 1.0
    seed: int = 469

    def __post_init__(self):
        if self.shading_radius <= 0:
            raise ValueError(f"shading radius must be positive, got {self.shading_radius}")


def sample_training_mask(width: int, height: int, seed: int) -> np.ndarray:
    """Draw one random training shading mask, deterministic in the seed.

    With probability 0.6 the mask zeroes the union of 1..5 random rectangles
    and circles (each axis span uniform in 10-50% of the image dimension);
    with probability 0.3 it removes the entire shading (all zeros); with
    probability 0.1 it keeps it all (all ones).
    """
    if width < 1 or height < 1:
        raise ValueError(f"bad mask dimensions {width}x{height}")
    rng = np.random.default_rng(seed)
    branch = rng.random()
    if branch >= _SHAPE_BRANCH_P:
        if branch < _SHAPE_BRANCH_P + _REMOVE_ALL_P:
            return np.zeros((height, width, 1), dtype=np.float32)
        return np.ones((height, width, 1), dtype=np.float32)

    mask = np.ones((height, width), dtype=np.float32)
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(int(rng.integers(_MIN_SHAPES, _MAX_SHAPES + 1))):
        if rng.random() < 0.5:
            sw = min(width, max(1, int(round(rng.uniform(_SPAN_FRAC_LO, _SPAN_FRAC_HI) * width))))
            sh = min(height, max(1, int(round(rng.uniform(_SPAN_FRAC_LO, _SPAN_FRAC_HI) * height))))
            x0 = int(rng.integers(0, width - sw + 1))
            y0 = int(rng.integers(0, height - sh + 1))
            mask[y0 : y0 + sh, x0 : x0 + sw] = 0.0
        else:
            span = rng.uniform(_SPAN_FRAC_LO, _SPAN_FRAC_HI) * min(width, height)
            r = max(0.5, span / 2.0)
            cx = rng.uniform(min(r, width - r), max(r, width - r)) if width > 2 * r else width / 2.0
            cy = (
                rng.uniform(min(r, height - r), max(r, height - r))
                if height > 2 * r
                else height / 2.0
            )
            inside = (xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2 <= r * r
            mask[inside] = 0.0
    return mask[:, :, np.newaxis]


def build_inference_shading_mask(
    object_mask,
    comp_depth,
    camera: CameraModel,
    params: MaskParams = MaskParams(),
) -> np.ndarray:
    """Geometry-driven shading mask for an inserted object.

    Every background pixel whose 3-D position lies within distance
    d = radius * (object height) of the object's surface points is masked
    (shadows reach roughly one object height).  Pixels directly above the
    object -- horizontal position inside the object footprint bounds and up
    coordinate above its top -- stay unmasked so ceilings keep their shading.
    Object pixels themselves are always masked: their shading is unknown.
    """
    m = as_float_map(object_mask, name="object_mask")[:, :, 0] >= 0.5
    if not m.any():
        raise ValueError("object mask is empty")
    positions = unproject_depth(comp_depth, camera).astype(np.float64)
    up = np.asarray(camera.up, dtype=np.float64)
    up_coord = positions @ up
    obj_points = positions[m]
    obj_up = up_coord[m]
    d = params.shading_radius * float(obj_up.max() - obj_up.min())

    if d > 0:
        dist, _ = cKDTree(obj_points).query(positions.reshape(-1, 3), workers=-1)
        masked = dist.reshape(m.shape) <= d
    else:
        masked = m.copy()

    # Horizontal basis spanning the plane perpendicular to "up".
    seed_axis = np.array([1.0, 0.0, 0.0]) if abs(up[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    h1 = np.cross(up, seed_axis)
    h1 /= np.linalg.norm(h1)
    h2 = np.cross(up, h1)
    c1 = positions @ h1
    c2 = positions @ h2
    o1, o2 = c1[m], c2[m]
    above = (
        (c1 >= o1.min())
        & (c1 <= o1.max())
        & (c2 >= o2.min())
        & (c2 <= o2.max())
        & (up_coord > obj_up.max())
    )
    masked &= ~above
    masked |= m
    return (~masked).astype(np.float32)[:, :, np.newaxis]


def feather_object_mask(object_mask) -> np.ndarray:
    """Soften a binary object mask with the standard 15x15, sigma 1.5 blur."""
    blurred = gaussian_blur(object_mask, FEATHER_KERNEL, FEATHER_SIGMA)
    return np.clip(blurred, 0.0, 1.0)
