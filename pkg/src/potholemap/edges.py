"""Edge detectors: Canny and zero-cross (Laplacian-of-Gaussian sign changes)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryImage, DimensionError, GrayImage


@dataclass(frozen=True)
class CannyParams:
    """Blur scale and hysteresis fractions of the maximum gradient magnitude."""

    sigma: float = 1.4
    low_frac: float = 0.10
    high_frac: float = 0.20

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0.0 < self.low_frac < self.high_frac <= 1.0:
            raise ValueError("need 0 < low_frac < high_frac <= 1")


@dataclass(frozen=True)
class ZerocrossParams:
    """LoG scale and minimum response difference at a crossing (0 = automatic)."""

    sigma: float = 2.0
    threshold: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """1-D Gaussian taps truncated at 3*sigma and renormalized to sum 1."""
    r = math.ceil(3.0 * sigma)
    k = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def log_kernel(sigma: float) -> np.ndarray:
    """Laplacian-of-Gaussian kernel of side 2*ceil(3*sigma)+1, zero-mean."""
    r = math.ceil(3.0 * sigma)
    y, x = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    rr = x * x + y * y
    g = np.exp(-rr / (2.0 * sigma * sigma))
    g /= g.sum()
    k = g * (rr - 2.0 * sigma * sigma) / sigma**4
    return k - k.mean()


def log_response(img: GrayImage, sigma: float) -> np.ndarray:
    """Convolve with the LoG kernel under replicate-edge padding."""
    kernel = log_kernel(sigma)
    if img.height < kernel.shape[0] or img.width < kernel.shape[1]:
        raise DimensionError(
            f"image {img.width}x{img.height} smaller than LoG kernel side {kernel.shape[0]}"
        )
    return ndimage.convolve(img.pixels, kernel, mode="nearest")


def _shifted(a: np.ndarray, dr: int, dc: int, fill: float = 0.0) -> np.ndarray:
    """Array of neighbor values at offset (dr, dc); out-of-bounds read as fill."""
    h, w = a.shape
    out = np.full_like(a, fill)
    rs, re = max(dr, 0), min(h + dr, h)
    cs, ce = max(dc, 0), min(w + dc, w)
    out[rs - dr : re - dr, cs - dc : ce - dc] = a[rs:re, cs:ce]
    return out


def canny(img: GrayImage, params: CannyParams = CannyParams()) -> BinaryImage:
    """Canny edge map: blur, Sobel gradients, non-maximum suppression over four
    quantized directions, then hysteresis at low_frac/high_frac of the max
    gradient magnitude."""
    if img.height < 3 or img.width < 3:
        raise DimensionError(f"canny needs at least 3x3, got {img.width}x{img.height}")

    taps = gaussian_kernel1d(params.sigma)
    blurred = ndimage.correlate1d(img.pixels, taps, axis=0, mode="nearest")
    blurred = ndimage.correlate1d(blurred, taps, axis=1, mode="nearest")

    smooth = np.array([1.0, 2.0, 1.0])
    diff = np.array([-1.0, 0.0, 1.0])
    gx = ndimage.correlate1d(
        ndimage.correlate1d(blurred, smooth, axis=0, mode="nearest"), diff, axis=1, mode="nearest"
    )
    gy = ndimage.correlate1d(
        ndimage.correlate1d(blurred, smooth, axis=1, mode="nearest"), diff, axis=0, mode="nearest"
    )
    mag = np.hypot(gx, gy)
    gmax = float(mag.max())
    if gmax == 0.0:
        return BinaryImage(np.zeros_like(mag, dtype=bool))

    # Quantize the gradient direction to 0/45/90/135 degrees (y grows downward).
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    d0 = (ang < 22.5) | (ang >= 157.5)
    d45 = (ang >= 22.5) & (ang < 67.5)
    d90 = (ang >= 67.5) & (ang < 112.5)
    d135 = (ang >= 112.5) & (ang < 157.5)

    before = np.where(
        d0, _shifted(mag, 0, -1), np.where(d45, _shifted(mag, -1, -1), np.where(d90, _shifted(mag, -1, 0), _shifted(mag, -1, 1)))
    )
    after = np.where(
        d0, _shifted(mag, 0, 1), np.where(d45, _shifted(mag, 1, 1), np.where(d90, _shifted(mag, 1, 0), _shifted(mag, 1, -1)))
    )
    # Strict comparison on the "after" side keeps exactly one pixel of a tied
    # pair, so an ideal step yields a single-pixel-wide edge.
    ridge = (mag >= before) & (mag > after) & (mag > 0.0)

    strong = ridge & (mag > params.high_frac * gmax)
    if not strong.any():
        return BinaryImage(np.zeros_like(ridge))
    weak = ridge & (mag > params.low_frac * gmax)

    lab, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(lab[strong])] = True
    keep[0] = False
    return BinaryImage(keep[lab])


def zerocross(img: GrayImage, params: ZerocrossParams = ZerocrossParams()) -> BinaryImage:
    """Zero-cross edge map: mark pixels whose LoG response changes sign against
    any of the 8 neighbors with an absolute difference above the threshold.

    threshold 0 selects the automatic value 0.75 * RMS of the response.
    """
    resp = log_response(img, params.sigma)
    thr = params.threshold
    if thr == 0.0:
        thr = 0.75 * float(np.sqrt(np.mean(resp * resp)))

    edges = np.zeros(resp.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            nb = _shifted(resp, dr, dc, fill=0.0)  # fill 0 can never be opposite-signed
            edges |= (resp * nb < 0.0) & (np.abs(resp - nb) > thr)
    return BinaryImage(edges)
