"""Image file loading and saving (PNG and binary PPM/PGM, 8 bits per channel)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import BinaryImage, GrayImage, RgbImage, luminance

_SAVE_FORMATS = {".png", ".pgm", ".ppm"}


def load_rgb(path: str | Path) -> RgbImage:
    """Load any supported image file as 8-bit RGB."""
    with Image.open(path) as im:
        return RgbImage(np.asarray(im.convert("RGB")))


def load_gray(path: str | Path) -> GrayImage:
    """Load an image as unit-interval grayscale.

    Grayscale files map k -> k/255 directly; color files go through
    :func:`potholemap.raster.luminance`.
    """
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            return GrayImage(arr / 255.0)
        return luminance(RgbImage(np.asarray(im.convert("RGB"))))


def _check_suffix(path: Path) -> None:
    if path.suffix.lower() not in _SAVE_FORMATS:
        raise ValueError(f"unsupported image format {path.suffix!r} (use .png, .pgm or .ppm)")


def save_gray(img: GrayImage, path: str | Path) -> None:
    """Write grayscale as 8-bit PNG or PGM, rounding k = round(v * 255)."""
    path = Path(path)
    _check_suffix(path)
    arr = np.round(img.pixels * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def save_binary(img: BinaryImage, path: str | Path) -> None:
    """Write a binary image with foreground as 255 and background as 0."""
    path = Path(path)
    _check_suffix(path)
    arr = np.where(img.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def save_rgb(img: RgbImage, path: str | Path) -> None:
    """Write an RGB image as PNG or binary PPM."""
    path = Path(path)
    _check_suffix(path)
    Image.fromarray(img.pixels, mode="RGB").save(path)
