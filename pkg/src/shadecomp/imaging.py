"""Float image container, PFM file I/O, and pixel-level transforms.

Images are numpy float32 arrays of shape (H, W, C) with C in {1, 3},
interpreted as linear-light values (no gamma).  All operations here are pure
functions; inputs are never mutated.  PFM (portable float map) is the
interchange format because it is trivially specified and round-trips 32-bit
floats bit-exactly.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


class MapShapeError(ValueError):
    """Dimensions, channel count, or data length are inconsistent."""


class NonFiniteValueError(ValueError):
    """A map contains NaN or infinite values."""


class PfmHeaderError(ValueError):
    """A PFM file header is malformed."""


#: Rec. 709 luma weights, applied to linear RGB.
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)


def as_float_map(data, channels: int | None = None, name: str = "map") -> np.ndarray:
    """Validate and normalize an array into the (H, W, C) float32 carrier.

    Accepts (H, W) or (H, W, C) input.  Raises MapShapeError for bad channel
    counts and NonFiniteValueError for NaN/Inf content.
    """
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise MapShapeError(f"{name}: expected 2-D or 3-D array, got shape {arr.shape}")
    if arr.shape[2] not in (1, 3):
        raise MapShapeError(f"{name}: channel count must be 1 or 3, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MapShapeError(f"{name}: empty image {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteValueError(f"{name}: contains NaN or Inf")
    return np.ascontiguousarray(arr)


def write_pfm(path, map_data) -> None:
    """Write a 1- or 3-channel float map as a PFM file.

    3-channel maps use the "PF" header, 1-channel the "Pf" header.  The scale
    field is -1.0 (little-endian samples) and rows are stored bottom-to-top
    as the format requires.  Write->read round-trips are bit-exact.
    """
    arr = as_float_map(map_data, name=str(path))
    h, w, c = arr.shape
    tag = "PF" if c == 3 else "Pf"
    header = f"{tag}\n{w} {h}\n-1.0\n".encode("ascii")
    body = np.flipud(arr).astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(body)


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into an (H, W, C) float32 array, top row first.

    Raises PfmHeaderError for a malformed header, MapShapeError when the
    payload length disagrees with the header, and NonFiniteValueError if the
    file carries NaN/Inf samples.
    """
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise PfmHeaderError(f"{path}: bad PFM tag {tag!r}")
        dims = f.readline().split()
        if len(dims) != 2:
            raise PfmHeaderError(f"{path}: bad dimension line")
        try:
            w, h = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise PfmHeaderError(f"{path}: non-integer dimensions") from exc
        if w < 1 or h < 1:
            raise PfmHeaderError(f"{path}: non-positive dimensions {w}x{h}")
        try:
            scale = float(f.readline())
        except ValueError as exc:
            raise PfmHeaderError(f"{path}: bad scale line") from exc
        endian = "<" if scale < 0 else ">"
        buf = f.read()
    expected = w * h * channels * 4
    if len(buf) < expected:
        raise MapShapeError(f"{path}: truncated payload ({len(buf)} < {expected} bytes)")
    arr = np.frombuffer(buf[:expected], dtype=f"{endian}f4").astype(np.float32)
    arr = arr.reshape(h, w, channels)
    arr = np.flipud(arr).copy()
    if not np.isfinite(arr).all():
        raise NonFiniteValueError(f"{path}: contains NaN or Inf samples")
    return arr


def gaussian_kernel_1d(kernel: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps of odd length `kernel`."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"kernel must be odd and >= 1, got {kernel}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = kernel // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return (taps / taps.sum()).astype(np.float64)


def gaussian_blur(map_data, kernel: int = 15, sigma: float = 1.5) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge boundary handling.

    The kernel is normalized to sum 1, so constant images are fixed points
    and the image mean is preserved up to boundary effects.
    """
    arr = as_float_map(map_data)
    taps = gaussian_kernel_1d(kernel, sigma)
    out = arr.astype(np.float64)
    out = ndimage.correlate1d(out, taps, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, taps, axis=1, mode="nearest")
    return out.astype(np.float32)


def to_grayscale(map_data) -> np.ndarray:
    """Rec. 709 luma of a linear-RGB map, as an (H, W, 1) array."""
    arr = as_float_map(map_data)
    if arr.shape[2] != 3:
        raise MapShapeError(f"to_grayscale expects 3 channels, got {arr.shape[2]}")
    weights = np.asarray(LUMA_WEIGHTS, dtype=np.float32)
    return (arr @ weights)[:, :, np.newaxis]


def _axis_lerp_coords(n_out: int, n_in: int):
    """Half-pixel-centered source coordinates for 1-D bilinear resampling."""
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    lo = np.floor(x)
    t = (x - lo).astype(np.float32)
    i0 = np.clip(lo, 0, n_in - 1).astype(np.intp)
    i1 = np.clip(lo + 1, 0, n_in - 1).astype(np.intp)
    return i0, i1, t


def resize_bilinear(map_data, width: int, height: int) -> np.ndarray:
    """Bilinear resize with half-pixel-centered sampling.

    Resizing to the input dimensions is the exact identity.
    """
    arr = as_float_map(map_data)
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be >= 1, got {width}x{height}")
    h, w, _ = arr.shape
    r0, r1, ty = _axis_lerp_coords(height, h)
    rows = arr[r0] * (1.0 - ty)[:, None, None] + arr[r1] * ty[:, None, None]
    c0, c1, tx = _axis_lerp_coords(width, w)
    out = rows[:, c0] * (1.0 - tx)[None, :, None] + rows[:, c1] * tx[None, :, None]
    return out.astype(np.float32)
