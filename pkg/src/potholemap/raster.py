"""Core image containers, luminance conversion, and level thresholding."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# ITU-R BT.601 luma weights for the R, G, B channels.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class DimensionError(ValueError):
    """Raised when image dimensions do not satisfy an operation's requirements."""


class NoThresholdError(ValueError):
    """Raised when no separating threshold exists (effectively constant image)."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major raster of unit-interval intensities, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError(f"gray image must be non-empty 2-D, got shape {p.shape}")
        if float(p.min()) < 0.0 or float(p.max()) > 1.0:
            raise ValueError("gray intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Row-major raster of 8-bit RGB triples, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise DimensionError(f"rgb image must have shape (h, w, 3), got {p.shape}")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("rgb channel values must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Row-major raster of boolean foreground flags, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"binary image must be non-empty 2-D, got shape {b.shape}")
        object.__setattr__(self, "bits", b.astype(bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def foreground_count(self) -> int:
        return int(self.bits.sum())

    def foreground_fraction(self) -> float:
        return self.foreground_count() / self.bits.size


@dataclass(frozen=True)
class Level:
    """Binarization threshold, a scalar in [0, 1]."""

    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"level must lie in [0, 1], got {self.value}")


def luminance(img: RgbImage) -> GrayImage:
    """Convert RGB to unit-interval luminance with the BT.601 weights."""
    wr, wg, wb = LUMA_WEIGHTS
    p = img.pixels.astype(np.float64)
    y = (wr * p[:, :, 0] + wg * p[:, :, 1] + wb * p[:, :, 2]) / 255.0
    return GrayImage(np.clip(y, 0.0, 1.0))


def binarize(img: GrayImage, level: Level) -> BinaryImage:
    """Foreground where intensity strictly exceeds the level."""
    return BinaryImage(img.pixels > level.value)


def otsu_level(img: GrayImage) -> Level:
    """Pick the level maximizing between-class variance over a 256-bin histogram.

    When several thresholds tie for the maximum (a flat valley between two
    populations), the midpoint of the tying range is returned so the level
    falls strictly between the classes.  Raises :class:`NoThresholdError` for
    an image whose histogram cannot be split (all mass in one bin).
    """
    bins = np.round(img.pixels * 255.0).astype(np.int64).ravel()
    hist = np.bincount(bins, minlength=256)

    total = int(hist.sum())
    cum_n = np.cumsum(hist)
    cum_s = np.cumsum(hist * np.arange(256, dtype=np.int64))
    total_s = int(cum_s[-1])

    # Between-class variance for split "bin <= t vs bin > t", compared as exact
    # fractions so tying plateaus are detected reliably.
    best: Fraction | None = None
    ties: list[int] = []
    for t in range(256):
        n0 = int(cum_n[t])
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        s0 = int(cum_s[t])
        bcv = Fraction((s0 * n1 - (total_s - s0) * n0) ** 2, n0 * n1)
        if best is None or bcv > best:
            best, ties = bcv, [t]
        elif bcv == best:
            ties.append(t)

    if best is None or best == 0:
        raise NoThresholdError("no threshold exists: image intensities are not separable")
    return Level((sum(ties) / len(ties)) / 255.0)
