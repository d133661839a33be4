"""Intrinsic-layer object compositing toolkit.

Composites the intrinsic maps (depth, normals, albedo, shading) of a
background and an inserted object, masks the shading region the object may
influence, runs a pluggable renderer twice, and blends the two renders via a
shadow-opacity ratio so the real background survives untouched outside the
object's reach.  Ships with a deterministic analytic renderer used as a
ground-truth oracle, a procedural scene generator, and a metric suite
(PSNR, RMSE, si-RMSE, MAE, SSIM, FLIP).
"""

__version__ = "0.1.0"

from .imaging import (
    MapShapeError,
    NonFiniteValueError,
    PfmHeaderError,
    as_float_map,
    gaussian_blur,
    read_pfm,
    resize_bilinear,
    to_grayscale,
    write_pfm,
)
from .intrinsics import (
    CameraModel,
    IntrinsicBundle,
    derive_shading,
    load_bundle,
    reconstruct_image,
    save_bundle,
    unproject_depth,
)
from .masks import (
    MaskParams,
    build_inference_shading_mask,
    feather_object_mask,
    sample_training_mask,
)
from .compositor import (
    CompositeInputs,
    align_object_depth,
    color_balance_factor,
    compose_pipeline,
    composite_intrinsics,
    final_composite,
    fit_footprint_affine,
    shadow_opacity_ratio,
)
from .render import (
    AnalyticRenderer,
    ExternalRenderer,
    ExternalRendererError,
    LightSpec,
    analytic_render,
    check_renderer_contract,
    shadow_visibility,
)
from .scenes import (
    Primitive,
    SceneData,
    SceneSpec,
    SupportRegion,
    detect_support_region,
    generate_scene,
    sample_scene,
    select_placement,
)
from .metrics import (
    MetricReport,
    aggregate_reports,
    binomial_confusion_interval,
    evaluate_pair,
    mae,
    psnr,
    rmse,
    si_rmse,
    ssim,
)
from .flip import flip
