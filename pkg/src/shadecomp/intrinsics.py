"""Intrinsic data model: camera geometry, map bundles, and their on-disk form.

A bundle holds the per-pixel intrinsic decomposition of one view: depth in
meters, camera-space unit normals, linear-RGB albedo in [0, 1], and
non-negative (possibly HDR) shading, such that image = albedo * shading in
linear light.  Optional roughness/metallic channels ride along untouched.

The on-disk form is a directory of PFM files plus a manifest.json carrying
the camera ({"fov_deg": ..., "width": ..., "height": ...}); a shading_mask.pfm
marks where shading is known (1) versus to-be-synthesized (0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .imaging import MapShapeError, as_float_map, read_pfm, write_pfm

#: Denominator clamp for shading derivation; zero albedo is undefined otherwise.
ALBEDO_EPS = 1e-4

#: Per-pixel tolerance on the normal vector length.
NORMAL_TOL = 1e-3


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: horizontal FOV in degrees plus image dimensions.

    Image y points down, so with a level camera "up" in the world is -y;
    tilted rigs can override `up`.  The principal point defaults to the image
    center.
    """

    width: int
    height: int
    fov_deg: float = 50.0
    cx: float | None = None
    cy: float | None = None
    up: tuple[float, float, float] = (0.0, -1.0, 0.0)

    def __post_init__(self):
        if not (0.0 < self.fov_deg < 180.0):
            raise ValueError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad image dimensions {self.width}x{self.height}")
        n = math.sqrt(sum(v * v for v in self.up))
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"up vector must be unit length, got norm {n}")

    @property
    def focal_px(self) -> float:
        """Focal length in pixels: (width/2) / tan(FOV/2)."""
        return (self.width / 2.0) / math.tan(math.radians(self.fov_deg) / 2.0)

    @property
    def principal_point(self) -> tuple[float, float]:
        cx = self.width / 2.0 if self.cx is None else self.cx
        cy = self.height / 2.0 if self.cy is None else self.cy
        return cx, cy


@dataclass
class IntrinsicBundle:
    """Named set of intrinsic maps sharing one camera and one resolution.

    `shading` may be None for an inserted object whose shading is unknown by
    construction.  `shading_mask` (1 = known, 0 = to synthesize) is attached
    when the bundle is headed for a renderer; absent means fully known.
    """

    depth: np.ndarray
    normals: np.ndarray
    albedo: np.ndarray
    camera: CameraModel
    shading: np.ndarray | None = None
    roughness: np.ndarray | None = None
    metallic: np.ndarray | None = None
    shading_mask: np.ndarray | None = None

    def __post_init__(self):
        self.depth = as_float_map(self.depth, name="depth")
        self.normals = as_float_map(self.normals, name="normals")
        self.albedo = as_float_map(self.albedo, name="albedo")
        for name in ("shading", "roughness", "metallic", "shading_mask"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, as_float_map(val, name=name))
        self.validate()

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape[0], self.depth.shape[1]

    def validate(self) -> None:
        h, w = self.shape
        if (self.camera.width, self.camera.height) != (w, h):
            raise MapShapeError(
                f"camera is {self.camera.width}x{self.camera.height}, maps are {w}x{h}"
            )
        for name, chans in (
            ("depth", 1),
            ("normals", 3),
            ("albedo", 3),
            ("shading", 3),
            ("roughness", 1),
            ("metallic", 1),
            ("shading_mask", 1),
        ):
            arr = getattr(self, name)
            if arr is None:
                continue
            if arr.shape[:2] != (h, w):
                raise MapShapeError(f"{name} shape {arr.shape[:2]} != depth shape {(h, w)}")
            if arr.shape[2] != chans:
                raise MapShapeError(f"{name} must have {chans} channel(s), got {arr.shape[2]}")
        if np.any(self.depth <= 0):
            raise ValueError("depth must be strictly positive everywhere")
        norms = np.linalg.norm(self.normals, axis=2)
        if np.any(np.abs(norms - 1.0) > NORMAL_TOL):
            worst = float(np.abs(norms - 1.0).max())
            raise ValueError(f"normals must be unit length (worst deviation {worst:.2e})")
        if np.any(self.albedo < 0) or np.any(self.albedo > 1):
            raise ValueError("albedo must lie in [0, 1]")
        if self.shading is not None and np.any(self.shading < 0):
            raise ValueError("shading must be non-negative")
        for name in ("roughness", "metallic", "shading_mask"):
            arr = getattr(self, name)
            if arr is not None and (np.any(arr < 0) or np.any(arr > 1)):
                raise ValueError(f"{name} must lie in [0, 1]")

    def with_shading_mask(self, mask) -> "IntrinsicBundle":
        """Copy with the shading zeroed wherever the mask marks it unknown."""
        mask = as_float_map(mask, name="shading_mask")
        shading = None if self.shading is None else self.shading * mask
        return replace(self, shading=shading, shading_mask=mask)


def derive_shading(image, albedo) -> np.ndarray:
    """Per-channel shading = image / max(albedo, 1e-4).

    The albedo clamp keeps zero-albedo pixels finite; output is >= 0 for
    non-negative images.
    """
    img = as_float_map(image, name="image")
    alb = as_float_map(albedo, name="albedo")
    if img.shape != alb.shape:
        raise MapShapeError(f"image {img.shape} vs albedo {alb.shape}")
    return img / np.maximum(alb, ALBEDO_EPS)


def reconstruct_image(albedo, shading) -> np.ndarray:
    """Per-channel product albedo * shading (the inverse of derive_shading)."""
    alb = as_float_map(albedo, name="albedo")
    sh = as_float_map(shading, name="shading")
    if alb.shape != sh.shape:
        raise MapShapeError(f"albedo {alb.shape} vs shading {sh.shape}")
    return alb * sh


def unproject_depth(depth, camera: CameraModel) -> np.ndarray:
    """Lift a depth map to camera-space positions, one XYZ triple per pixel.

    Pixel centers sit at (col + 0.5, row + 0.5).  For a pixel at (u, v) with
    depth d: X = (u - cx) d / f, Y = (v - cy) d / f, Z = d.  The output's
    second channel is the 3-D y coordinate used for object-height estimates.
    """
    d = as_float_map(depth, name="depth")
    if d.shape[2] != 1:
        raise MapShapeError(f"depth must be 1-channel, got {d.shape[2]}")
    if np.any(d <= 0):
        raise ValueError("depth must be strictly positive")
    h, w, _ = d.shape
    cx, cy = camera.principal_point
    f = camera.focal_px
    u = (np.arange(w, dtype=np.float32) + 0.5 - cx) / f
    v = (np.arange(h, dtype=np.float32) + 0.5 - cy) / f
    z = d[:, :, 0]
    x = u[np.newaxis, :] * z
    y = v[:, np.newaxis] * z
    return np.stack([x, y, z], axis=2).astype(np.float32)


# ---------------------------------------------------------------------------
# Bundle-on-disk
# ---------------------------------------------------------------------------

_REQUIRED_FILES = {"depth": "depth.pfm", "normals": "normals.pfm", "albedo": "albedo.pfm"}
_OPTIONAL_FILES = {
    "shading": "shading.pfm",
    "roughness": "roughness.pfm",
    "metallic": "metallic.pfm",
    "shading_mask": "shading_mask.pfm",
}


def save_bundle(bundle: IntrinsicBundle, directory, object_mask=None) -> Path:
    """Write a bundle directory: one PFM per map plus manifest.json.

    An optional object mask is stored as mask.pfm alongside the maps.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for attr, fname in _REQUIRED_FILES.items():
        write_pfm(directory / fname, getattr(bundle, attr))
    for attr, fname in _OPTIONAL_FILES.items():
        arr = getattr(bundle, attr)
        if arr is not None:
            write_pfm(directory / fname, arr)
    if object_mask is not None:
        write_pfm(directory / "mask.pfm", as_float_map(object_mask, name="mask"))
    cam = bundle.camera
    manifest = {"fov_deg": cam.fov_deg, "width": cam.width, "height": cam.height}
    if cam.cx is not None:
        manifest["cx"] = cam.cx
    if cam.cy is not None:
        manifest["cy"] = cam.cy
    if tuple(cam.up) != (0.0, -1.0, 0.0):
        manifest["up"] = list(cam.up)
    with open(directory / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return directory


def load_bundle(directory) -> IntrinsicBundle:
    """Read a bundle directory written by save_bundle (or a compatible tool)."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{directory}: missing manifest.json")
    with open(manifest_path) as f:
        manifest = json.load(f)
    try:
        camera = CameraModel(
            width=int(manifest["width"]),
            height=int(manifest["height"]),
            fov_deg=float(manifest["fov_deg"]),
            cx=manifest.get("cx"),
            cy=manifest.get("cy"),
            up=tuple(manifest.get("up", (0.0, -1.0, 0.0))),
        )
    except KeyError as exc:
        raise KeyError(f"{manifest_path}: missing camera field {exc}") from exc
    maps = {}
    for attr, fname in _REQUIRED_FILES.items():
        path = directory / fname
        if not path.is_file():
            raise FileNotFoundError(f"{directory}: missing {fname}")
        maps[attr] = read_pfm(path)
    for attr, fname in _OPTIONAL_FILES.items():
        path = directory / fname
        if path.is_file():
            maps[attr] = read_pfm(path)
    return IntrinsicBundle(camera=camera, **maps)


def load_object_mask(directory) -> np.ndarray | None:
    """Read the optional mask.pfm of a bundle directory, if present."""
    path = Path(directory) / "mask.pfm"
    return read_pfm(path) if path.is_file() else None
