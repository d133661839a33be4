import numpy as np
import pytest

from shadecomp.intrinsics import CameraModel, IntrinsicBundle
from shadecomp.render import LightSpec
from shadecomp.scenes import Primitive, SceneSpec, generate_scene


def make_flat_bundle(width=16, height=16, albedo=0.6, shading=0.8, depth=2.0):
    """Wall-like bundle: constant depth, normals facing the camera."""
    camera = CameraModel(width=width, height=height)
    normals = np.zeros((height, width, 3), dtype=np.float32)
    normals[:, :] = (0.0, 0.0, -1.0)
    return IntrinsicBundle(
        depth=np.full((height, width, 1), depth, dtype=np.float32),
        normals=normals,
        albedo=np.full((height, width, 3), albedo, dtype=np.float32),
        shading=np.full((height, width, 3), shading, dtype=np.float32),
        camera=camera,
    )


def make_box_scene(size=96, azimuth=90.0, elevation=55.0, tall=0.8, radius=0.22, z_extra=0.0):
    """Deterministic box-on-floor scene used across the render/mask tests."""
    camera = CameraModel(width=size, height=size, fov_deg=50.0)
    ground_y = 1.4
    z = camera.focal_px * ground_y / (size - size / 2.0 - 8.0) + radius + z_extra
    light = LightSpec.from_angles(
        azimuth, elevation, intensity=(0.9, 0.9, 0.9), ambient=(0.2, 0.2, 0.2)
    )
    spec = SceneSpec(
        ground_y=ground_y,
        wall_z=11.0,
        primitive=Primitive(
            "box", (2 * radius, tall, 2 * radius), (0.05, ground_y - tall / 2.0, z)
        ),
        ground_albedo=(0.55, 0.5, 0.45),
        wall_albedo=(0.4, 0.45, 0.5),
        object_albedo=(0.7, 0.3, 0.25),
        light=light,
        camera=camera,
    )
    return generate_scene(spec)


@pytest.fixture(scope="session")
def box_scene():
    return make_box_scene()
