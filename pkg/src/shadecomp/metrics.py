"""Full-reference image quality metrics and paired-study statistics.

Distance metrics (PSNR, RMSE, si-RMSE, MAE) are computed in double precision
over all pixels and channels with peak value 1.  SSIM follows the standard
11x11 Gaussian-window formulation on grayscale; FLIP lives in flip.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flip import flip
from .imaging import LUMA_WEIGHTS, MapShapeError, resize_bilinear

#: Evaluation-time resize target for perceptual metrics that require it.
PERCEPTUAL_RESIZE = (256, 256)

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


def _pair(pred, ref) -> tuple[np.ndarray, np.ndarray]:
    # Unlike the float32 image carrier, metrics run in double precision on
    # the values exactly as given (closed-form identities depend on it).
    p = np.asarray(pred, dtype=np.float64)
    r = np.asarray(ref, dtype=np.float64)
    if p.ndim == 2:
        p = p[:, :, np.newaxis]
    if r.ndim == 2:
        r = r[:, :, np.newaxis]
    if p.shape != r.shape:
        raise MapShapeError(f"pred {p.shape} vs ref {r.shape}")
    if p.ndim != 3 or p.shape[2] not in (1, 3):
        raise MapShapeError(f"expected (H, W, 1|3) images, got {p.shape}")
    if not (np.isfinite(p).all() and np.isfinite(r).all()):
        raise ValueError("metric inputs must be finite")
    return p, r


def rmse(pred, ref) -> float:
    """Root mean squared error over all pixels and channels."""
    p, r = _pair(pred, ref)
    return float(np.sqrt(np.mean((p - r) ** 2)))


def mae(pred, ref) -> float:
    """Mean absolute error over all pixels and channels."""
    p, r = _pair(pred, ref)
    return float(np.mean(np.abs(p - r)))


def psnr(pred, ref) -> float:
    """Peak signal-to-noise ratio in dB for peak value 1; +inf when equal."""
    e = rmse(pred, ref)
    if e == 0.0:
        return math.inf
    return 20.0 * math.log10(1.0 / e)


def si_rmse(pred, ref) -> float:
    """Scale-invariant RMSE: RMSE after the optimal scalar rescale of pred.

    The optimal scale is the closed-form least-squares alpha =
    <pred, ref> / <pred, pred>.
    """
    p, r = _pair(pred, ref)
    denom = float(np.sum(p * p))
    if denom == 0.0:
        raise ValueError("si_rmse is undefined for an all-zero prediction")
    alpha = float(np.sum(p * r)) / denom
    return float(np.sqrt(np.mean((alpha * p - r) ** 2)))


def _ssim_window() -> np.ndarray:
    radius = _SSIM_WINDOW // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


def _valid_windows(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    # 'valid'-mode correlation via stride tricks; window is small and fixed.
    k = window.shape[0]
    view = np.lib.stride_tricks.sliding_window_view(img, (k, k))
    return np.einsum("ijkl,kl->ij", view, window)


def ssim(pred, ref) -> float:
    """Structural similarity on grayscale, mean over valid 11x11 windows.

    Uses the standard Gaussian window (sigma 1.5) and constants
    C1 = 0.01^2, C2 = 0.03^2 for peak value 1.
    """
    p, r = _pair(pred, ref)
    if p.shape[2] == 3:
        weights = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
        p = (p @ weights)[:, :, np.newaxis]
        r = (r @ weights)[:, :, np.newaxis]
    p2, r2 = p[:, :, 0], r[:, :, 0]
    if min(p2.shape) < _SSIM_WINDOW:
        raise ValueError(f"image smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window")
    w = _ssim_window()
    mu_p = _valid_windows(p2, w)
    mu_r = _valid_windows(r2, w)
    var_p = _valid_windows(p2 * p2, w) - mu_p**2
    var_r = _valid_windows(r2 * r2, w) - mu_r**2
    cov = _valid_windows(p2 * r2, w) - mu_p * mu_r
    num = (2 * mu_p * mu_r + _SSIM_C1) * (2 * cov + _SSIM_C2)
    den = (mu_p**2 + mu_r**2 + _SSIM_C1) * (var_p + var_r + _SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    """All metrics for one prediction/reference pair.

    `extras` holds perceptual metrics evaluated on the 256x256-resized pair
    (the slot reserved for network-based metrics plugged in externally).
    """

    name: str
    psnr: float
    rmse: float
    si_rmse: float
    mae: float
    ssim: float
    flip: float
    extras: dict[str, float] = field(default_factory=dict)

    FIELDS = ("psnr", "rmse", "si_rmse", "mae", "ssim", "flip")

    def values(self) -> dict[str, float]:
        out = {k: getattr(self, k) for k in self.FIELDS}
        out.update(self.extras)
        return out


def evaluate_pair(pred, ref, name: str = "", perceptual_extras=None) -> MetricReport:
    """Compute the whole metric suite for one image pair.

    FLIP runs at native resolution.  `perceptual_extras` maps metric names to
    callables evaluated on the pair resized to 256x256 (the convention for
    perceptual metrics sensitive to rendering noise).
    """
    report = MetricReport(
        name=name,
        psnr=psnr(pred, ref),
        rmse=rmse(pred, ref),
        si_rmse=si_rmse(pred, ref),
        mae=mae(pred, ref),
        ssim=ssim(pred, ref),
        flip=float(flip(pred, ref)[1]),
    )
    if perceptual_extras:
        p256 = resize_bilinear(pred, *PERCEPTUAL_RESIZE)
        r256 = resize_bilinear(ref, *PERCEPTUAL_RESIZE)
        for key, fn in perceptual_extras.items():
            report.extras[key] = float(fn(p256, r256))
    return report


def aggregate_reports(reports: list[MetricReport]) -> MetricReport:
    """Mean metrics across a corpus of equal-sized pairs.

    RMSE aggregates in quadrature (RMS of the per-pair values), so it equals
    the RMSE over all pixels pooled; every other metric is the arithmetic
    mean of the per-pair values.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    agg = MetricReport(
        name="mean",
        psnr=float(np.mean([r.psnr for r in reports])),
        rmse=float(np.sqrt(np.mean([r.rmse**2 for r in reports]))),
        si_rmse=float(np.mean([r.si_rmse for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
        ssim=float(np.mean([r.ssim for r in reports])),
        flip=float(np.mean([r.flip for r in reports])),
    )
    keys = set().union(*(r.extras.keys() for r in reports))
    for key in keys:
        agg.extras[key] = float(np.mean([r.extras[key] for r in reports if key in r.extras]))
    return agg


@dataclass(frozen=True)
class StudyRecord:
    """Two-alternative forced-choice tally: k successes out of n trials."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("study needs at least one trial")
        if not (0 <= self.k <= self.n):
            raise ValueError(f"k={self.k} outside [0, {self.n}]")


def binomial_confusion_interval(
    record: StudyRecord, level: float = 0.95, method: str = "wald"
) -> tuple[float, float]:
    """Confidence interval for a 2AFC confusion rate: (estimate, half-width).

    Wald is the default (half-width z * sqrt(p(1-p)/n)); Wilson is available
    for degenerate tallies where Wald collapses to zero width.
    """
    from scipy import stats

    z = float(stats.norm.ppf(0.5 + level / 2.0))
    p_hat = record.k / record.n
    n = record.n
    if method == "wald":
        return p_hat, z * math.sqrt(p_hat * (1.0 - p_hat) / n)
    if method == "wilson":
        denom = 1.0 + z * z / n
        center = (p_hat + z * z / (2 * n)) / denom
        half = (z / denom) * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4 * n * n))
        return center, half
    raise ValueError(f"unknown interval method {method!r}")
