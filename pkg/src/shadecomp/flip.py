"""LDR-FLIP perceptual difference metric.

Implements the reference low-dynamic-range FLIP formulation: images are
transformed to an opponent color space and filtered with contrast sensitivity
functions matched to the viewing distance (pixels per degree of visual
angle), color differences are measured with HyAB on Hunt-adjusted L*a*b*, and a
separate edge/point feature pipeline amplifies differences on structures the
eye is drawn to.  Per-pixel output lies in [0, 1]; 0 means imperceptible.

Inputs here are linear-light RGB maps in [0, 1] (the package-wide carrier);
they are encoded to sRGB before entering the metric, which is defined on
display-referred values.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .imaging import MapShapeError, as_float_map

#: Default observer: the reference viewing condition of a 0.7 m wide 4K
#: display at 0.7 m distance, approximately 67 pixels per degree.
DEFAULT_PPD = 67.0

_QC = 0.7  # color difference exponent
_QF = 0.5  # feature difference exponent
_PC = 0.4  # redistribution knee position (fraction of max color distance)
_PT = 0.95  # redistribution knee value
_FEATURE_WIDTH = 0.082  # degrees, peak-to-trough of the edge detector

# D65 reference white.
_ILLUMINANT = np.array([0.950428545, 1.000000000, 1.088900371])
_INV_ILLUMINANT = np.array([1.052156925, 1.000000000, 0.918357670])

_LINRGB_TO_XYZ = np.array(
    [
        [10135552 / 24577794, 8788810 / 24577794, 4435075 / 24577794],
        [2613072 / 12288897, 8788810 / 12288897, 887015 / 12288897],
        [1425312 / 73733382, 8788810 / 73733382, 70074185 / 73733382],
    ]
)
_XYZ_TO_LINRGB = np.array(
    [
        [3.241003275, -1.537398934, -0.498615861],
        [-0.969224334, 1.875930071, 0.041554224],
        [0.055639423, -0.204011202, 1.057148933],
    ]
)

# Contrast sensitivity function parameters per opponent channel:
# (a1, b1, a2, b2) of a sum of two Gaussians in the frequency domain.
_CSF_PARAMS = {
    "A": (1.0, 0.0047, 0.0, 1e-5),
    "RG": (1.0, 0.0053, 0.0, 1e-5),
    "BY": (34.1, 0.04, 13.5, 0.025),
}
_MAX_CSF_SCALE = 0.04


def linear_to_srgb(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return np.where(x > 0.0031308, 1.055 * np.power(x, 1.0 / 2.4) - 0.055, 12.92 * x)


def srgb_to_linear(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.04045, np.power((x + 0.055) / 1.055, 2.4), x / 12.92)


def _matmul_color(img: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return img @ matrix.T


def _xyz_to_ycxcz(xyz: np.ndarray) -> np.ndarray:
    n = xyz * _INV_ILLUMINANT
    y = 116.0 * n[..., 1] - 16.0
    cx = 500.0 * (n[..., 0] - n[..., 1])
    cz = 200.0 * (n[..., 1] - n[..., 2])
    return np.stack([y, cx, cz], axis=-1)


def _ycxcz_to_xyz(ycc: np.ndarray) -> np.ndarray:
    y = (ycc[..., 0] + 16.0) / 116.0
    cx = ycc[..., 1] / 500.0
    cz = ycc[..., 2] / 200.0
    return np.stack([y + cx, y, y - cz], axis=-1) * _ILLUMINANT


def _xyz_to_lab(xyz: np.ndarray) -> np.ndarray:
    n = xyz * _INV_ILLUMINANT
    delta = 6.0 / 29.0
    n = np.where(n > delta**3, np.cbrt(n), n / (3.0 * delta**2) + 4.0 / 29.0)
    l = 116.0 * n[..., 1] - 16.0
    a = 500.0 * (n[..., 0] - n[..., 1])
    b = 200.0 * (n[..., 1] - n[..., 2])
    return np.stack([l, a, b], axis=-1)


def _srgb_to_ycxcz(srgb: np.ndarray) -> np.ndarray:
    return _xyz_to_ycxcz(_matmul_color(srgb_to_linear(srgb), _LINRGB_TO_XYZ))


def _ycxcz_to_linrgb(ycc: np.ndarray) -> np.ndarray:
    return _matmul_color(_ycxcz_to_xyz(ycc), _XYZ_TO_LINRGB)


def _linrgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    return _xyz_to_lab(_matmul_color(rgb, _LINRGB_TO_XYZ))


def _csf_kernel(ppd: float, channel: str) -> np.ndarray:
    """Spatial-domain contrast sensitivity kernel for one opponent channel."""
    a1, b1, a2, b2 = _CSF_PARAMS[channel]
    radius = int(np.ceil(3.0 * np.sqrt(_MAX_CSF_SCALE / (2.0 * np.pi**2)) * ppd))
    delta = 1.0 / ppd
    x, y = np.meshgrid(np.arange(-radius, radius + 1), np.arange(-radius, radius + 1))
    z = (x * delta) ** 2 + (y * delta) ** 2
    s = a1 * np.sqrt(np.pi / b1) * np.exp(-np.pi**2 * z / b1)
    s = s + a2 * np.sqrt(np.pi / b2) * np.exp(-np.pi**2 * z / b2)
    return s / s.sum()


def _filter2d(img2d: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return ndimage.correlate(img2d, kernel, mode="nearest")


def _csf_filter(ycc: np.ndarray, kernels: dict[str, np.ndarray]) -> np.ndarray:
    """CSF-filter each opponent channel, then clamp in linear RGB."""
    filtered = np.stack(
        [
            _filter2d(ycc[..., 0], kernels["A"]),
            _filter2d(ycc[..., 1], kernels["RG"]),
            _filter2d(ycc[..., 2], kernels["BY"]),
        ],
        axis=-1,
    )
    return np.clip(_ycxcz_to_linrgb(filtered), 0.0, 1.0)


def _hunt_adjust(lab: np.ndarray) -> np.ndarray:
    out = lab.copy()
    out[..., 1] = 0.01 * lab[..., 0] * lab[..., 1]
    out[..., 2] = 0.01 * lab[..., 0] * lab[..., 2]
    return out


def _hyab(ref: np.ndarray, test: np.ndarray) -> np.ndarray:
    delta = ref - test
    return np.abs(delta[..., 0]) + np.linalg.norm(delta[..., 1:3], axis=-1)


def _redistribute(powered: np.ndarray, cmax: float) -> np.ndarray:
    knee = _PC * cmax
    return np.where(
        powered < knee,
        (_PT / knee) * powered,
        _PT + ((powered - knee) / (cmax - knee)) * (1.0 - _PT),
    )


def _feature_kernel(ppd: float, kind: str) -> np.ndarray:
    """Edge (first-derivative) or point (second-derivative) Gaussian kernel,
    positive taps normalized to +1 and negative taps to -1."""
    sd = 0.5 * _FEATURE_WIDTH * ppd
    radius = int(np.ceil(3.0 * sd))
    x, y = np.meshgrid(np.arange(-radius, radius + 1), np.arange(-radius, radius + 1))
    g = np.exp(-(x**2 + y**2) / (2.0 * sd * sd))
    if kind == "edge":
        gx = -x * g
    else:
        gx = (x**2 / (sd * sd) - 1.0) * g
    neg = -gx[gx < 0].sum()
    pos = gx[gx > 0].sum()
    return np.where(gx < 0, gx / neg, gx / pos)


def _feature_magnitude(y_norm: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    fx = _filter2d(y_norm, kernel)
    fy = _filter2d(y_norm, kernel.T)
    return np.hypot(fx, fy)


def flip(pred, ref, ppd: float = DEFAULT_PPD) -> tuple[np.ndarray, float]:
    """FLIP error between two linear-RGB maps: (per-pixel map, mean).

    The per-pixel map is (H, W, 1) in [0, 1].  The metric is symmetric in
    its arguments.
    """
    if ppd <= 0:
        raise ValueError(f"pixels-per-degree must be positive, got {ppd}")
    p = as_float_map(pred, name="pred").astype(np.float64)
    r = as_float_map(ref, name="ref").astype(np.float64)
    if p.shape != r.shape:
        raise MapShapeError(f"pred {p.shape} vs ref {r.shape}")
    if p.shape[2] == 1:
        p = np.repeat(p, 3, axis=2)
        r = np.repeat(r, 3, axis=2)

    p_ycc = _srgb_to_ycxcz(linear_to_srgb(p))
    r_ycc = _srgb_to_ycxcz(linear_to_srgb(r))

    # Color pipeline: CSF filtering, Hunt-adjusted L*a*b*, HyAB distance.
    kernels = {c: _csf_kernel(ppd, c) for c in ("A", "RG", "BY")}
    p_lab = _hunt_adjust(_linrgb_to_lab(_csf_filter(p_ycc, kernels)))
    r_lab = _hunt_adjust(_linrgb_to_lab(_csf_filter(r_ycc, kernels)))
    delta_hyab = _hyab(r_lab, p_lab)

    green = _hunt_adjust(_linrgb_to_lab(np.array([[[0.0, 1.0, 0.0]]])))
    blue = _hunt_adjust(_linrgb_to_lab(np.array([[[0.0, 0.0, 1.0]]])))
    cmax = float(_hyab(green, blue)[0, 0]) ** _QC
    delta_color = _redistribute(delta_hyab**_QC, cmax)

    # Feature pipeline on the normalized achromatic channel.
    p_y = (p_ycc[..., 0] + 16.0) / 116.0
    r_y = (r_ycc[..., 0] + 16.0) / 116.0
    edge_k = _feature_kernel(ppd, "edge")
    point_k = _feature_kernel(ppd, "point")
    delta_feature = np.maximum(
        np.abs(_feature_magnitude(r_y, edge_k) - _feature_magnitude(p_y, edge_k)),
        np.abs(_feature_magnitude(p_y, point_k) - _feature_magnitude(r_y, point_k)),
    )
    delta_feature = ((1.0 / np.sqrt(2.0)) * delta_feature) ** _QF

    error = np.power(delta_color, 1.0 - delta_feature)
    error_map = error[:, :, np.newaxis].astype(np.float32)
    return error_map, float(error.mean())
