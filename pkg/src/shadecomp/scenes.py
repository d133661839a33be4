"""Procedural evaluation scenes with closed-form ground truth.

A scene is a ground plane, a back wall, and one primitive (box, sphere, or
cylinder) lit by a single directional light.  Depth, normals, and albedo are
rasterized by exact ray casting, shading comes from the analytic renderer's
lighting model, so every downstream number is checkable: the ground-truth
image is albedo * shading by construction.

Also hosts support-region detection (where can an object stand?) and
footprint placement.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imaging import as_float_map
from .intrinsics import CameraModel, IntrinsicBundle, reconstruct_image, unproject_depth
from .render import LightSpec, shadow_visibility

#: Support-region defaults at the 512-pixel reference width: maximum angle to
#: the up vector, and the smallest admissible inscribed-circle radius.
SUPPORT_ANGLE_DEG = 15.0
SUPPORT_MIN_RADIUS_PX = 75.0
_SUPPORT_REFERENCE_WIDTH = 512


@dataclass(frozen=True)
class Primitive:
    """One object primitive.  `position` is the center in camera space;
    `size` is (full extents xyz) for a box, (radius,) for a sphere, and
    (radius, height) for a cylinder with vertical axis."""

    kind: str
    size: tuple[float, ...]
    position: tuple[float, float, float]

    def __post_init__(self):
        expected = {"box": 3, "sphere": 1, "cylinder": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if len(self.size) != expected[self.kind]:
            raise ValueError(f"{self.kind} needs {expected[self.kind]} size value(s)")
        if any(s <= 0 for s in self.size):
            raise ValueError("primitive sizes must be positive")

    @property
    def height(self) -> float:
        if self.kind == "box":
            return self.size[1]
        if self.kind == "sphere":
            return 2.0 * self.size[0]
        return self.size[1]


@dataclass
class SceneSpec:
    """Declarative test scene.  `ground_y` is the camera height above the
    floor (the floor sits at camera-space y = +ground_y, y pointing down);
    `wall_z` bounds the scene so depth stays finite."""

    ground_y: float
    wall_z: float
    primitive: Primitive
    ground_albedo: tuple[float, float, float]
    wall_albedo: tuple[float, float, float]
    object_albedo: tuple[float, float, float]
    light: LightSpec
    camera: CameraModel

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)

    @staticmethod
    def from_json(text: str) -> "SceneSpec":
        raw = json.loads(text)
        raw["primitive"] = Primitive(
            kind=raw["primitive"]["kind"],
            size=tuple(raw["primitive"]["size"]),
            position=tuple(raw["primitive"]["position"]),
        )
        raw["light"] = LightSpec(
            direction=tuple(raw["light"]["direction"]),
            intensity=tuple(raw["light"]["intensity"]),
            ambient=tuple(raw["light"]["ambient"]),
        )
        cam = raw["camera"]
        raw["camera"] = CameraModel(
            width=cam["width"],
            height=cam["height"],
            fov_deg=cam["fov_deg"],
            cx=cam.get("cx"),
            cy=cam.get("cy"),
            up=tuple(cam.get("up", (0.0, -1.0, 0.0))),
        )
        for key in ("ground_albedo", "wall_albedo", "object_albedo"):
            raw[key] = tuple(raw[key])
        return SceneSpec(**raw)


# ---------------------------------------------------------------------------
# Ray casting
# ---------------------------------------------------------------------------

_FAR = np.inf


def _ray_grid(camera: CameraModel):
    """Per-pixel ray directions (dx, dy, 1); depth equals the ray parameter t."""
    cx, cy = camera.principal_point
    f = camera.focal_px
    u = (np.arange(camera.width, dtype=np.float64) + 0.5 - cx) / f
    v = (np.arange(camera.height, dtype=np.float64) + 0.5 - cy) / f
    dx, dy = np.meshgrid(u, v)
    return dx, dy


def _hit_ground(dx, dy, ground_y):
    with np.errstate(divide="ignore"):
        t = np.where(dy > 1e-9, ground_y / np.where(dy > 1e-9, dy, 1.0), _FAR)
    return t


def _hit_sphere(dx, dy, center, radius):
    a = dx * dx + dy * dy + 1.0
    b = -2.0 * (dx * center[0] + dy * center[1] + center[2])
    c = float(np.dot(center, center)) - radius * radius
    disc = b * b - 4.0 * a * c
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(np.maximum(disc, 0.0))
        t = (-b - sq) / (2.0 * a)
    return np.where((disc >= 0.0) & (t > 1e-9), t, _FAR)


def _hit_box(dx, dy, center, extents):
    lo = np.asarray(center) - np.asarray(extents) / 2.0
    hi = np.asarray(center) + np.asarray(extents) / 2.0
    tmin = np.full(dx.shape, -np.inf)
    tmax = np.full(dx.shape, np.inf)
    for axis, d in enumerate((dx, dy, np.ones_like(dx))):
        parallel = np.abs(d) <= 1e-12
        d_safe = np.where(parallel, 1.0, d)
        t1 = lo[axis] / d_safe
        t2 = hi[axis] / d_safe
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        inside_slab = (lo[axis] <= 0.0) and (0.0 <= hi[axis])
        near = np.where(parallel, -np.inf if inside_slab else np.inf, near)
        far = np.where(parallel, np.inf if inside_slab else -np.inf, far)
        tmin = np.maximum(tmin, near)
        tmax = np.minimum(tmax, far)
    hit = (tmax >= tmin) & (tmin > 1e-9)
    return np.where(hit, tmin, _FAR)


def _hit_cylinder(dx, dy, center, radius, height):
    y_top = center[1] - height / 2.0
    y_bot = center[1] + height / 2.0
    a = dx * dx + 1.0
    b = -2.0 * (dx * center[0] + center[2])
    c = center[0] ** 2 + center[2] ** 2 - radius * radius
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    t_side = (-b - sq) / (2.0 * a)
    y_at = t_side * dy
    side_ok = (disc >= 0.0) & (t_side > 1e-9) & (y_at >= y_top) & (y_at <= y_bot)
    t_side = np.where(side_ok, t_side, _FAR)

    def cap(y_cap):
        with np.errstate(divide="ignore"):
            t = np.where(np.abs(dy) > 1e-12, y_cap / np.where(np.abs(dy) > 1e-12, dy, 1.0), _FAR)
        px = t * dx - center[0]
        pz = t - center[2]
        ok = (t > 1e-9) & (px * px + pz * pz <= radius * radius)
        return np.where(ok, t, _FAR)

    return np.minimum(t_side, np.minimum(cap(y_top), cap(y_bot)))


def _object_hits(dx, dy, prim: Primitive):
    if prim.kind == "sphere":
        return _hit_sphere(dx, dy, prim.position, prim.size[0])
    if prim.kind == "box":
        return _hit_box(dx, dy, prim.position, prim.size)
    return _hit_cylinder(dx, dy, prim.position, prim.size[0], prim.size[1])


def _object_normals(dx, dy, t, prim: Primitive):
    px = t * dx - prim.position[0]
    py = t * dy - prim.position[1]
    pz = t - prim.position[2]
    if prim.kind == "sphere":
        n = np.stack([px, py, pz], axis=-1)
    elif prim.kind == "box":
        half = np.asarray(prim.size) / 2.0
        rel = np.stack([px / half[0], py / half[1], pz / half[2]], axis=-1)
        axis = np.argmax(np.abs(rel), axis=-1)
        n = np.zeros(rel.shape)
        idx = np.indices(axis.shape)
        n[idx[0], idx[1], axis] = np.sign(rel[idx[0], idx[1], axis])
    else:
        radius, height = prim.size
        on_cap = np.abs(np.abs(py) - height / 2.0) < 1e-6
        n_side = np.stack([px, np.zeros_like(py), pz], axis=-1)
        n_cap = np.stack([np.zeros_like(px), np.sign(py), np.zeros_like(pz)], axis=-1)
        n = np.where(on_cap[..., None], n_cap, n_side)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    return n / np.maximum(norm, 1e-12)


def _rasterize(spec: SceneSpec, with_object: bool):
    """Exact depth/normals/albedo for the scene, plus the object hit mask."""
    dx, dy = _ray_grid(spec.camera)
    t_ground = _hit_ground(dx, dy, spec.ground_y)
    t_wall = np.full(dx.shape, spec.wall_z)
    t_obj = _object_hits(dx, dy, spec.primitive) if with_object else np.full(dx.shape, _FAR)

    stack = np.stack([t_ground, t_wall, t_obj])
    surf = np.argmin(stack, axis=0)
    t = np.take_along_axis(stack, surf[np.newaxis], axis=0)[0]

    normals = np.zeros((*dx.shape, 3))
    normals[surf == 0] = (0.0, -1.0, 0.0)
    normals[surf == 1] = (0.0, 0.0, -1.0)
    obj_mask = surf == 2
    if obj_mask.any():
        normals[obj_mask] = _object_normals(dx, dy, t, spec.primitive)[obj_mask]

    albedo = np.zeros((*dx.shape, 3))
    albedo[surf == 0] = spec.ground_albedo
    albedo[surf == 1] = spec.wall_albedo
    albedo[obj_mask] = spec.object_albedo

    depth = t[:, :, np.newaxis].astype(np.float32)
    return (
        depth,
        normals.astype(np.float32),
        albedo.astype(np.float32),
        obj_mask[:, :, np.newaxis].astype(np.float32),
    )


def _shade(depth, normals, camera, light: LightSpec):
    """Directional-light shading with height-field shadows (3-channel)."""
    positions = unproject_depth(depth, camera)
    vis = shadow_visibility(positions, depth, camera, light)
    direction = np.asarray(light.direction, dtype=np.float32)
    ndotl = np.clip(normals @ direction, 0.0, None)[:, :, np.newaxis]
    ambient = np.asarray(light.ambient, dtype=np.float32).reshape(1, 1, 3)
    intensity = np.asarray(light.intensity, dtype=np.float32).reshape(1, 1, 3)
    return (ambient + intensity * (ndotl * vis)).astype(np.float32), vis


@dataclass
class SceneData:
    """Everything generate_scene produces for one spec."""

    spec: SceneSpec
    bundle_bg: IntrinsicBundle
    bundle_full: IntrinsicBundle
    bundle_obj: IntrinsicBundle
    object_mask: np.ndarray
    gt_composite: np.ndarray
    gt_background: np.ndarray
    shadow_mask: np.ndarray


def generate_scene(spec: SceneSpec) -> SceneData:
    """Rasterize and shade the scene with and without its object.

    The emitted bundles carry fully-known shading (no mask); ground-truth
    images are albedo * shading exactly.  The object bundle has no shading
    (unknown by construction) and fills non-object pixels with far-plane
    placeholders that the object mask excludes from any composite.
    """
    cam = spec.camera
    d_bg, n_bg, a_bg, _ = _rasterize(spec, with_object=False)
    d_full, n_full, a_full, obj_mask = _rasterize(spec, with_object=True)
    if not np.any(obj_mask >= 0.5):
        raise ValueError("object is outside the camera frustum")

    s_bg, vis_bg = _shade(d_bg, n_bg, cam, spec.light)
    s_full, vis_full = _shade(d_full, n_full, cam, spec.light)

    bundle_bg = IntrinsicBundle(depth=d_bg, normals=n_bg, albedo=a_bg, shading=s_bg, camera=cam)
    bundle_full = IntrinsicBundle(
        depth=d_full, normals=n_full, albedo=a_full, shading=s_full, camera=cam
    )

    m = obj_mask >= 0.5
    d_obj = np.where(m, d_full, np.float32(spec.wall_z))
    n_obj = np.where(m, n_full, np.float32(0.0))
    n_obj[~m[:, :, 0]] = (0.0, 0.0, -1.0)
    a_obj = np.where(m, a_full, np.float32(0.5))
    bundle_obj = IntrinsicBundle(depth=d_obj, normals=n_obj, albedo=a_obj, camera=cam)

    shadow = (vis_full < 0.5) & (vis_bg >= 0.5) & ~m
    return SceneData(
        spec=spec,
        bundle_bg=bundle_bg,
        bundle_full=bundle_full,
        bundle_obj=bundle_obj,
        object_mask=obj_mask,
        gt_composite=reconstruct_image(a_full, s_full),
        gt_background=reconstruct_image(a_bg, s_bg),
        shadow_mask=shadow.astype(np.float32),
    )


# ---------------------------------------------------------------------------
# Support regions and placement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportRegion:
    """A detected horizontal region: its mask, the largest inscribed circle
    radius in pixels, and that circle's center (x, y)."""

    mask: np.ndarray
    inscribed_radius: float
    center: tuple[int, int]


def detect_support_region(
    normals,
    camera: CameraModel,
    angle_thresh_deg: float = SUPPORT_ANGLE_DEG,
    min_radius_px: float = SUPPORT_MIN_RADIUS_PX,
) -> SupportRegion | None:
    """Find the horizontal surface area suitable for placing an object.

    Pixels whose normal is within `angle_thresh_deg` of the up vector form
    the candidate mask; its exact Euclidean distance transform (image borders
    count as boundary) gives the largest inscribed circle.  Returns None when
    that circle is smaller than `min_radius_px`, which is stated at a 512 px
    wide reference image and scaled linearly with width.
    """
    n = as_float_map(normals, name="normals")
    up = np.asarray(camera.up, dtype=np.float32)
    cos_thresh = math.cos(math.radians(angle_thresh_deg))
    mask = (n @ up) > cos_thresh
    min_radius = min_radius_px * camera.width / _SUPPORT_REFERENCE_WIDTH
    if not mask.any():
        return None
    padded = np.pad(mask, 1)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    radius = float(dist.max())
    if radius < min_radius:
        return None
    flat = int(np.argmax(dist))
    cy, cx = np.unravel_index(flat, dist.shape)
    return SupportRegion(
        mask=mask.astype(np.float32)[:, :, np.newaxis],
        inscribed_radius=radius,
        center=(int(cx), int(cy)),
    )


def select_placement(region: SupportRegion, footprint_radius_px: float):
    """Center of the region if the footprint circle fits, else None.

    The region's inscribed radius is the maximum admissible footprint;
    callers scale their object down to it when needed.
    """
    if footprint_radius_px <= region.inscribed_radius:
        return region.center
    return None


# ---------------------------------------------------------------------------
# Random scene sampling
# ---------------------------------------------------------------------------


def sample_scene(rng: np.random.Generator, width: int = 256, height: int = 256) -> SceneSpec:
    """Draw a random evaluation scene whose object is fully in frame and whose
    shadow stays within one object height (light elevation >= 50 degrees)."""
    camera = CameraModel(width=width, height=height, fov_deg=50.0)
    ground_y = float(rng.uniform(1.2, 1.8))
    wall_z = float(rng.uniform(9.0, 14.0))

    # Flat-based primitives only: footprint depth alignment is well-posed for
    # them, matching how furniture-like objects rest on support surfaces.
    kind = ("box", "cylinder")[int(rng.integers(0, 2))]
    tall = float(rng.uniform(0.55, 1.0))
    # Keep objects slimmer than tall so side shadows from their back edges
    # stay within one object height of a camera-visible surface point.
    radius = tall * float(rng.uniform(0.2, 0.35))
    # The ground contact point must project well inside the frame: the bottom
    # image row sees the floor at z = f * ground_y / (height - cy).
    _, cy = camera.principal_point
    z_lo = camera.focal_px * ground_y / (camera.height - cy - 14.0) + radius
    z = float(rng.uniform(z_lo, z_lo + 1.6))
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    max_x = max(0.05, 0.9 * z * tan_half - radius)
    x = float(rng.uniform(-max_x, max_x))
    # Rest the base flush with the floor: sinking it by half a pixel of
    # ground depth-run centers the footprint depth residuals on zero, so
    # the pipeline's affine depth alignment is well-posed on these scenes.
    sink = min(0.5 * z * z / (camera.focal_px * ground_y), 0.1 * tall)
    base_y = ground_y + sink
    if kind == "sphere":
        r = min(radius, tall / 2.0)
        prim = Primitive("sphere", (r,), (x, base_y - r, z))
    elif kind == "box":
        prim = Primitive(
            "box", (2.0 * radius, tall, 2.0 * radius), (x, base_y - tall / 2.0, z)
        )
    else:
        prim = Primitive("cylinder", (radius, tall), (x, base_y - tall / 2.0, z))

    # Light bearing follows the object's bearing from the camera (small
    # jitter): the shadow is thrown toward the camera where the contact edge
    # is seen, and light rays marching up the depth map drift sideways as
    # little as possible at the object, so screen-space occlusion spillover
    # beside the silhouette stays negligible.  Elevation >= 55 degrees keeps
    # the shadow length below the relative-radius mask reach.
    azimuth = math.degrees(math.atan2(z, x)) + float(rng.uniform(-5.0, 5.0))
    elevation = float(rng.uniform(55.0, 70.0))
    strength = float(rng.uniform(0.65, 1.0))
    ambient = float(rng.uniform(0.15, 0.3))
    light = LightSpec.from_angles(
        azimuth,
        elevation,
        intensity=(strength, strength, strength),
        ambient=(ambient, ambient, ambient),
    )

    def _albedo(lo, hi):
        return tuple(float(v) for v in rng.uniform(lo, hi, size=3))

    return SceneSpec(
        ground_y=ground_y,
        wall_z=wall_z,
        primitive=prim,
        ground_albedo=_albedo(0.35, 0.8),
        wall_albedo=_albedo(0.3, 0.7),
        object_albedo=_albedo(0.2, 0.9),
        light=light,
        camera=camera,
    )


def _primitive_shadow_test(points: np.ndarray, prim: Primitive, light: LightSpec) -> np.ndarray:
    """Exact occlusion of (N, 3) points: does the ray toward the light hit
    the primitive?  Closed-form, independent of any depth-map marching."""
    l = np.asarray(light.direction, dtype=np.float64)
    p = points.astype(np.float64) - np.asarray(prim.position, dtype=np.float64)
    eps = 1e-9
    if prim.kind == "sphere":
        r = prim.size[0]
        b = 2.0 * (p @ l)
        c = np.sum(p * p, axis=1) - r * r
        disc = b * b - 4.0 * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        t0 = (-b - sq) / 2.0
        t1 = (-b + sq) / 2.0
        return (disc > 0.0) & (t1 > eps) & (t0 < np.inf)
    if prim.kind == "box":
        half = np.asarray(prim.size, dtype=np.float64) / 2.0
        tmin = np.full(p.shape[0], -np.inf)
        tmax = np.full(p.shape[0], np.inf)
        for axis in range(3):
            d = l[axis]
            if abs(d) > 1e-12:
                t1 = (-half[axis] - p[:, axis]) / d
                t2 = (half[axis] - p[:, axis]) / d
                tmin = np.maximum(tmin, np.minimum(t1, t2))
                tmax = np.minimum(tmax, np.maximum(t1, t2))
            else:
                outside = (p[:, axis] < -half[axis]) | (p[:, axis] > half[axis])
                tmax = np.where(outside, -np.inf, tmax)
        return (tmax >= tmin) & (tmax > eps)
    radius, height = prim.size
    a2 = l[0] * l[0] + l[2] * l[2]
    hit = np.zeros(p.shape[0], dtype=bool)
    if a2 > 1e-12:
        b2 = 2.0 * (p[:, 0] * l[0] + p[:, 2] * l[2])
        c2 = p[:, 0] ** 2 + p[:, 2] ** 2 - radius * radius
        disc = b2 * b2 - 4.0 * a2 * c2
        sq = np.sqrt(np.maximum(disc, 0.0))
        for sgn in (-1.0, 1.0):
            t = (-b2 + sgn * sq) / (2.0 * a2)
            y = p[:, 1] + t * l[1]
            hit |= (disc > 0.0) & (t > eps) & (np.abs(y) <= height / 2.0)
    if abs(l[1]) > 1e-12:
        for y_cap in (-height / 2.0, height / 2.0):
            t = (y_cap - p[:, 1]) / l[1]
            x = p[:, 0] + t * l[0]
            z = p[:, 2] + t * l[2]
            hit |= (t > eps) & (x * x + z * z <= radius * radius)
    return hit


def sample_valid_scene(
    rng: np.random.Generator,
    width: int = 256,
    height: int = 256,
    max_tries: int = 40,
    min_shadow_px: int | None = None,
    max_fit_warp: float = 0.05,
) -> SceneData:
    """Draw scenes until one is a sound compositing oracle.

    A scene qualifies when the footprint depth alignment is near-exact on
    it, its true cast shadow is big enough for stable overlap statistics
    and lies inside the geometry-driven shading mask with margin, and the
    rendered ground-truth shadow (which may include screen-space occlusion
    spillover behind the object) stays inside the mask too.  Mirrors the
    curation step any generated evaluation set needs; the geometric checks
    run before the expensive shadow marches.
    """
    from .compositor import fit_footprint_affine
    from .masks import MaskParams, build_inference_shading_mask
    from .render import _march_visibility

    # Gates are stated at 256x256; pixel areas scale with resolution.
    area_scale = (width * height) / 65536
    if min_shadow_px is None:
        min_shadow_px = max(40, round(150 * area_scale))
    min_obj_px = max(80, round(400 * area_scale))
    last = None
    for _ in range(max_tries):
        spec = sample_scene(rng, width=width, height=height)
        d_full, n_full, _, obj_mask = _rasterize(spec, with_object=True)
        m = obj_mask[:, :, 0] >= 0.5
        if m.sum() < min_obj_px:
            continue
        positions = unproject_depth(d_full, spec.camera)
        ground = (n_full[:, :, 1] < -0.999) & ~m
        true_shadow = _primitive_shadow_test(positions[ground], spec.primitive, spec.light)
        n_shadow = int(true_shadow.sum())
        if n_shadow < min_shadow_px:
            continue
        d_bg, _, _, _ = _rasterize(spec, with_object=False)
        a, b = fit_footprint_affine(d_full, d_bg, obj_mask)
        obj_depths = d_full[:, :, 0][m]
        warp = float(
            np.abs((a - 1.0) * np.array([obj_depths.min(), obj_depths.max()]) + b).max()
        )
        if warp > max_fit_warp:
            continue
        mask_margin = build_inference_shading_mask(
            obj_mask, d_full, spec.camera, MaskParams(shading_radius=0.85)
        )
        if (mask_margin[:, :, 0][ground][true_shadow] >= 0.5).any():
            continue
        mask_full = build_inference_shading_mask(
            obj_mask, d_full, spec.camera, MaskParams(shading_radius=0.9)
        )
        # Cheap probe for screen-space occlusion spillover: march only the
        # unmasked pixels in a window around the object (against both the
        # full and the background depth) before paying for the full render.
        tolerance = max(6, (8 * n_shadow) // 100)
        rows, cols = np.nonzero(m)
        h, w = m.shape
        window = np.zeros_like(m)
        window[
            max(0, rows.min() - 16) : min(h, rows.max() + 17),
            max(0, cols.min() - 16) : min(w, cols.max() + 17),
        ] = True
        probe = window & ~m & (mask_full[:, :, 0] >= 0.5)
        if probe.any():
            pts = positions[probe].astype(np.float64)
            vis_full = _march_visibility(pts, d_full[:, :, 0], spec.camera, spec.light)
            vis_bg = _march_visibility(pts, d_bg[:, :, 0], spec.camera, spec.light)
            if int((~vis_full & vis_bg).sum()) > tolerance:
                continue
        data = generate_scene(spec)
        last = data
        shadow_px = int(data.shadow_mask.sum())
        escaped = int(
            ((data.shadow_mask[:, :, 0] >= 0.5) & (mask_full[:, :, 0] >= 0.5)).sum()
        )
        if escaped <= max(6, (8 * shadow_px) // 100):
            return data
    if last is None:
        raise RuntimeError("no valid scene found; loosen the sampler constraints")
    return last


def save_scene(data: SceneData, directory) -> Path:
    """Write a scene directory: bg/ and obj/ bundles, the object mask, both
    ground-truth images, the oracle shadow mask, and scene.json."""
    from .imaging import write_pfm
    from .intrinsics import save_bundle

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_bundle(data.bundle_bg, directory / "bg")
    save_bundle(data.bundle_obj, directory / "obj", object_mask=data.object_mask)
    save_bundle(data.bundle_full, directory / "full")
    write_pfm(directory / "mask.pfm", data.object_mask)
    write_pfm(directory / "gt.pfm", data.gt_composite)
    write_pfm(directory / "gt_bg.pfm", data.gt_background)
    write_pfm(directory / "shadow_mask.pfm", data.shadow_mask)
    (directory / "scene.json").write_text(data.spec.to_json() + "\n")
    return directory
