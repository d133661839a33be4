"""Pluggable renderer contract, a deterministic analytic renderer, and the
subprocess bridge to external renderer executables.

A renderer turns an intrinsic bundle into an RGB image.  Where the bundle's
shading mask is 1 the output must reproduce albedo * shading (within the
implementation's fidelity tolerance); where it is 0 the renderer synthesizes
shading.  The analytic implementation lights the scene with one directional
light plus ambient and resolves shadows by marching the depth map as a height
field -- deterministic, closed-form checkable, and fast enough to serve as
the oracle for the full pipeline.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .imaging import MapShapeError, as_float_map, read_pfm
from .intrinsics import (
    CameraModel,
    IntrinsicBundle,
    reconstruct_image,
    save_bundle,
    unproject_depth,
)

#: Fixed render seed; renderers must be reproducible under it.
DEFAULT_SEED = 469

#: Height-field march configuration: step as a fraction of the median pixel
#: footprint, and the depth bias suppressing self-shadow acne.
MARCH_STEP_SCALE = 0.5
SHADOW_BIAS = 1e-2
_MAX_MARCH_STEPS = 100_000
_Z_NEAR = 1e-6


@dataclass(frozen=True)
class LightSpec:
    """One directional light: unit direction from surface toward the light,
    RGB intensity, and RGB ambient floor."""

    direction: tuple[float, float, float]
    intensity: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ambient: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError(f"light direction must be unit length, got {self.direction}")
        if any(v < 0 for v in self.intensity) or any(v < 0 for v in self.ambient):
            raise ValueError("light intensity and ambient must be non-negative")

    @staticmethod
    def from_angles(azimuth_deg: float, elevation_deg: float, **kwargs) -> "LightSpec":
        """Build the direction from azimuth/elevation (y-down camera space)."""
        az = np.radians(azimuth_deg)
        el = np.radians(elevation_deg)
        direction = (
            float(np.cos(el) * np.cos(az)),
            float(-np.sin(el)),
            float(np.cos(el) * np.sin(az)),
        )
        return LightSpec(direction=direction, **kwargs)


class Renderer(Protocol):
    """The renderer contract shared by the analytic oracle and bridges."""

    renderer_id: str

    def render(self, bundle: IntrinsicBundle, seed: int = DEFAULT_SEED) -> np.ndarray: ...


try:  # numba makes the march ~50x faster; the numpy path matches it exactly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


if _HAVE_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _march_kernel(points, depth, f, cx, cy, d0, d1, d2, step, bias, max_steps):  # pragma: no cover - exercised via _march_visibility
        n = points.shape[0]
        h, w = depth.shape
        visible = np.ones(n, dtype=numba.boolean)
        for i in numba.prange(n):
            px = points[i, 0] + d0 * step
            py = points[i, 1] + d1 * step
            pz = points[i, 2] + d2 * step
            for _ in range(max_steps):
                if pz <= 1e-6:
                    break
                u = px * f / pz + cx
                if u < 0.0 or u >= w:
                    break
                v = py * f / pz + cy
                if v < 0.0 or v >= h:
                    break
                if pz > depth[int(v), int(u)] + bias:
                    visible[i] = False
                    break
                px += d0 * step
                py += d1 * step
                pz += d2 * step
        return visible


def _march_visibility_numpy(points, d64, f, cx, cy, direction, step, bias):
    """Vectorized reference implementation of the march (see _march_kernel)."""
    h, w = d64.shape
    n = points.shape[0]
    visible = np.ones(n, dtype=bool)
    active = np.arange(n)
    p = points + direction * step
    for _ in range(_MAX_MARCH_STEPS):
        if active.size == 0:
            break
        z = p[:, 2]
        in_front = z > _Z_NEAR
        zs = np.where(in_front, z, 1.0)
        u = p[:, 0] * f / zs + cx
        v = p[:, 1] * f / zs + cy
        inside = in_front & (u >= 0.0) & (u < w) & (v >= 0.0) & (v < h)
        if not inside.any():
            break
        ii = np.nonzero(inside)[0]
        iu = u[ii].astype(np.intp)
        iv = v[ii].astype(np.intp)
        occluded = z[ii] > d64[iv, iu] + bias
        if occluded.any():
            visible[active[ii[occluded]]] = False
        keep = ii[~occluded]
        active = active[keep]
        p = p[keep] + direction * step
    return visible


def _march_visibility(
    points: np.ndarray,
    depth2d: np.ndarray,
    camera: CameraModel,
    light: LightSpec,
    step_scale: float = MARCH_STEP_SCALE,
    bias: float = SHADOW_BIAS,
    force_numpy: bool = False,
) -> np.ndarray:
    """Boolean visibility for an (N, 3) batch of camera-space points.

    Marches each point toward the light in fixed world-space steps, sampling
    the depth map as a height field; a sample deeper than the stored depth by
    more than `bias` shadows the point.  Leaving the view frustum terminates
    the march unoccluded.
    """
    f = camera.focal_px
    cx, cy = camera.principal_point
    direction = np.asarray(light.direction, dtype=np.float64)
    step = step_scale * float(np.median(depth2d)) / f
    d64 = np.ascontiguousarray(depth2d, dtype=np.float64)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if _HAVE_NUMBA and not force_numpy:
        return np.asarray(
            _march_kernel(
                pts, d64, f, cx, cy,
                direction[0], direction[1], direction[2],
                step, bias, _MAX_MARCH_STEPS,
            )
        )
    return _march_visibility_numpy(pts, d64, f, cx, cy, direction, step, bias)


def shadow_visibility(
    positions,
    depth,
    camera: CameraModel,
    light: LightSpec,
    step_scale: float = MARCH_STEP_SCALE,
    bias: float = SHADOW_BIAS,
) -> np.ndarray:
    """Per-pixel binary visibility toward the light, as an (H, W, 1) map."""
    pos = as_float_map(positions, name="positions")
    d = as_float_map(depth, name="depth")
    if pos.shape[2] != 3:
        raise MapShapeError("positions must be 3-channel")
    if pos.shape[:2] != d.shape[:2]:
        raise MapShapeError(f"positions {pos.shape[:2]} vs depth {d.shape[:2]}")
    vis = _march_visibility(
        pos.reshape(-1, 3), d[:, :, 0], camera, light, step_scale=step_scale, bias=bias
    )
    return vis.reshape(d.shape[0], d.shape[1], 1).astype(np.float32)


def analytic_render(
    bundle: IntrinsicBundle,
    light: LightSpec,
    step_scale: float = MARCH_STEP_SCALE,
    bias: float = SHADOW_BIAS,
) -> np.ndarray:
    """Deterministic single-light renderer.

    Pixels whose shading is known (mask 1, or no mask at all) reproduce
    albedo * shading exactly.  For unknown pixels the shading is synthesized
    as ambient + intensity * max(0, n.l) * V, with V the height-field shadow
    visibility of the bundle's own depth.
    """
    if bundle.shading_mask is not None:
        known = bundle.shading_mask[:, :, 0] >= 0.5
    else:
        known = np.ones(bundle.shape, dtype=bool)
    h, w = bundle.shape
    if bundle.shading is not None:
        shading = bundle.shading.copy()
    elif known.any():
        raise ValueError("bundle has known-shading pixels but no shading map")
    else:
        shading = np.zeros((h, w, 3), dtype=np.float32)

    unknown = ~known
    if unknown.any():
        direction = np.asarray(light.direction, dtype=np.float32)
        ndotl = np.clip(bundle.normals @ direction, 0.0, None)[unknown]
        positions = unproject_depth(bundle.depth, bundle.camera)
        vis = _march_visibility(
            positions[unknown].astype(np.float64),
            bundle.depth[:, :, 0],
            bundle.camera,
            light,
            step_scale=step_scale,
            bias=bias,
        )
        ambient = np.asarray(light.ambient, dtype=np.float32)
        intensity = np.asarray(light.intensity, dtype=np.float32)
        lit = (ndotl * vis).astype(np.float32)
        shading[unknown] = ambient[np.newaxis, :] + intensity[np.newaxis, :] * lit[:, np.newaxis]
    return reconstruct_image(bundle.albedo, shading)


@dataclass
class AnalyticRenderer:
    """Renderer-contract wrapper around analytic_render (seed is ignored:
    the renderer is deterministic by construction)."""

    light: LightSpec
    step_scale: float = MARCH_STEP_SCALE
    bias: float = SHADOW_BIAS
    renderer_id: str = "analytic"

    def render(self, bundle: IntrinsicBundle, seed: int = DEFAULT_SEED) -> np.ndarray:
        return analytic_render(bundle, self.light, step_scale=self.step_scale, bias=self.bias)


class ExternalRendererError(RuntimeError):
    """External renderer failed; carries the subprocess exit code if any."""

    def __init__(self, message: str, returncode: int | None = None):
        super().__init__(message)
        self.returncode = returncode


def external_render(
    bundle: IntrinsicBundle,
    executable,
    seed: int = DEFAULT_SEED,
    timeout: float = 600.0,
) -> np.ndarray:
    """Invoke an external renderer process over the bundle-on-disk protocol.

    The bundle (always including shading_mask.pfm; all-ones when absent) is
    written to a temp directory and the executable is run as
    ``<exe> <bundle_dir> <output_pfm> --seed <seed>``.  Exit 0 and a
    3-channel PFM of matching dimensions are required.
    """
    executable = Path(executable)
    if not executable.exists():
        raise ExternalRendererError(f"renderer executable not found: {executable}")
    if bundle.shading_mask is None:
        h, w = bundle.shape
        bundle = bundle.with_shading_mask(np.ones((h, w, 1), dtype=np.float32))
    with tempfile.TemporaryDirectory(prefix="shadecomp-render-") as tmp:
        bundle_dir = Path(tmp) / "bundle"
        out_path = Path(tmp) / "render.pfm"
        save_bundle(bundle, bundle_dir)
        argv = [str(executable), str(bundle_dir), str(out_path), "--seed", str(seed)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise ExternalRendererError(
                f"renderer timed out after {timeout:.0f}s: {executable}"
            ) from exc
        if proc.returncode != 0:
            raise ExternalRendererError(
                f"renderer exited with code {proc.returncode}: {proc.stderr.strip()}",
                returncode=proc.returncode,
            )
        if not out_path.is_file():
            raise ExternalRendererError(f"renderer produced no output at {out_path}")
        result = read_pfm(out_path)
    if result.shape != (bundle.shape[0], bundle.shape[1], 3):
        raise ExternalRendererError(
            f"renderer output shape {result.shape} != expected {(*bundle.shape, 3)}"
        )
    return result


@dataclass
class ExternalRenderer:
    """Renderer-contract wrapper around an external executable."""

    executable: str
    timeout: float = 600.0

    @property
    def renderer_id(self) -> str:
        return str(self.executable)

    def render(self, bundle: IntrinsicBundle, seed: int = DEFAULT_SEED) -> np.ndarray:
        return external_render(bundle, self.executable, seed=seed, timeout=self.timeout)


@dataclass(frozen=True)
class ContractCheck:
    name: str
    passed: bool
    detail: str


def check_renderer_contract(
    renderer: Renderer,
    bundle: IntrinsicBundle,
    seed: int = DEFAULT_SEED,
    shading_tolerance: float = 1e-6,
) -> list[ContractCheck]:
    """Run the renderer conformance suite against any renderer.

    Checks, in order: output dimensions match the bundle; two renders with
    the same seed are identical; known-shading pixels reproduce
    albedo * shading within the declared tolerance.
    """
    checks: list[ContractCheck] = []
    first = renderer.render(bundle, seed=seed)
    expected_shape = (bundle.shape[0], bundle.shape[1], 3)
    checks.append(
        ContractCheck(
            "output-dimensions",
            first.shape == expected_shape,
            f"got {first.shape}, expected {expected_shape}",
        )
    )
    second = renderer.render(bundle, seed=seed)
    checks.append(
        ContractCheck(
            "determinism",
            first.shape == second.shape and np.array_equal(first, second),
            "two renders with the same seed must be identical",
        )
    )
    if bundle.shading is not None:
        if bundle.shading_mask is not None:
            known = bundle.shading_mask[:, :, 0] >= 0.5
        else:
            known = np.ones(bundle.shape, dtype=bool)
        if known.any() and first.shape == expected_shape:
            target = reconstruct_image(bundle.albedo, bundle.shading)
            err = float(np.abs(first[known] - target[known]).max())
            checks.append(
                ContractCheck(
                    "known-shading-preservation",
                    err <= shading_tolerance,
                    f"max deviation {err:.3e} (tolerance {shading_tolerance:.1e})",
                )
            )
    return checks
