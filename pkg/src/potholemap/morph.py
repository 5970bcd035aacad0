"""Binary morphology: disk structuring elements, closing, conditional inversion,
hole filling, connected-component labeling, and colored overlays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryImage, DimensionError, RgbImage


class NoPotholeError(ValueError):
    """Raised when an image yields no foreground component at all."""


@dataclass(frozen=True, eq=False)
class StructuringElement:
    """Symmetric neighborhood of integer (dx, dy) offsets around the origin."""

    offsets: tuple[tuple[int, int], ...]
    radius: int

    def __post_init__(self):
        offs = set(self.offsets)
        if (0, 0) not in offs:
            raise ValueError("structuring element must contain the origin")
        if self.radius < 0:
            raise ValueError("structuring element radius must be >= 0")
        for dx, dy in offs:
            if (-dx, -dy) not in offs:
                raise ValueError("structuring element offsets must be symmetric under negation")
            if dx * dx + dy * dy > self.radius * self.radius:
                raise ValueError(f"offset ({dx}, {dy}) outside radius {self.radius}")
        object.__setattr__(self, "offsets", tuple(sorted(offs)))

    def footprint(self) -> np.ndarray:
        """Boolean mask of side 2*radius+1 with the origin at the center."""
        r = self.radius
        mask = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dx, dy in self.offsets:
            mask[dy + r, dx + r] = True
        return mask


def disk_se(radius: int) -> StructuringElement:
    """Exact Euclidean disk: all (dx, dy) with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    offs = [
        (dx, dy)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dx * dx + dy * dy <= radius * radius
    ]
    return StructuringElement(tuple(offs), radius)


def binary_morph(img: BinaryImage, se: StructuringElement, mode: str) -> BinaryImage:
    """Dilate or erode; offsets falling outside the image count as background."""
    if mode == "dilate":
        out = ndimage.binary_dilation(img.bits, structure=se.footprint(), border_value=0)
    elif mode == "erode":
        out = ndimage.binary_erosion(img.bits, structure=se.footprint(), border_value=0)
    else:
        raise ValueError(f"mode must be 'dilate' or 'erode', got {mode!r}")
    return BinaryImage(out)


def close(img: BinaryImage, se: StructuringElement) -> BinaryImage:
    """Morphological closing: dilation followed by erosion.

    Runs on a copy padded by the element radius so the dilation is not cropped
    at the frame; that makes the result the whole-plane closing (which never
    escapes a frame containing the input) and keeps closing extensive and
    idempotent up to the borders.
    """
    pad = se.radius
    if pad == 0:
        return BinaryImage(img.bits.copy())
    padded = BinaryImage(np.pad(img.bits, pad, constant_values=False))
    closed = binary_morph(binary_morph(padded, se, "dilate"), se, "erode")
    return BinaryImage(closed.bits[pad:-pad, pad:-pad])


def auto_invert(img: BinaryImage) -> tuple[BinaryImage, bool]:
    """Complement the image when foreground is the majority (> half the pixels).

    Returns the (possibly inverted) image and a flag saying whether inversion
    happened.  An exact 50/50 split is left unchanged.
    """
    if 2 * img.foreground_count() > img.bits.size:
        return BinaryImage(~img.bits), True
    return img, False


def fill_holes(img: BinaryImage) -> BinaryImage:
    """Turn background regions not 4-connected to the image border into foreground."""
    bg = ~img.bits
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)
    lab, _ = ndimage.label(bg, structure=four)
    border = np.unique(np.concatenate([lab[0, :], lab[-1, :], lab[:, 0], lab[:, -1]]))
    border = border[border > 0]
    holes = bg & ~np.isin(lab, border)
    return BinaryImage(img.bits | holes)


@dataclass(frozen=True, eq=False)
class LabelImage:
    """Non-negative component ids, row-major; 0 marks background."""

    labels: np.ndarray
    component_count: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or lab.shape[0] < 1 or lab.shape[1] < 1:
            raise DimensionError(f"label image must be non-empty 2-D, got shape {lab.shape}")
        lab = lab.astype(np.int32)
        present = np.unique(lab)
        positive = present[present > 0]
        if not np.array_equal(positive, np.arange(1, self.component_count + 1)):
            raise ValueError("labels must be exactly {0} union {1..component_count}")
        object.__setattr__(self, "labels", lab)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def label_components(img: BinaryImage, connectivity: int = 8) -> LabelImage:
    """Label maximal connected foreground regions 1..n.

    Labels are renumbered so component k is the k-th region encountered in a
    raster scan, which keeps the output deterministic.
    """
    if connectivity == 4:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)
    elif connectivity == 8:
        structure = np.ones((3, 3), dtype=int)
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")

    lab, n = ndimage.label(img.bits, structure=structure)
    if n > 1:
        values, first = np.unique(lab.ravel(), return_index=True)
        pos = values > 0
        order = np.argsort(first[pos], kind="stable")
        remap = np.zeros(n + 1, dtype=np.int32)
        remap[values[pos][order]] = np.arange(1, n + 1)
        lab = remap[lab]
    return LabelImage(lab, int(n))


def largest_component(labels: LabelImage) -> tuple[BinaryImage, int]:
    """Mask of the component with the most pixels; ties go to the smallest id."""
    if labels.component_count < 1:
        raise NoPotholeError("no pothole found: image has no foreground components")
    counts = np.bincount(labels.labels.ravel(), minlength=labels.component_count + 1)[1:]
    winner = int(np.argmax(counts)) + 1
    return BinaryImage(labels.labels == winner), int(counts[winner - 1])


def overlay_component(
    img: RgbImage,
    mask: BinaryImage,
    color: tuple[int, int, int] = (0, 0, 255),
    alpha: float = 0.5,
) -> RgbImage:
    """Blend the overlay color into masked pixels: round(alpha*color + (1-alpha)*pixel)."""
    if (img.height, img.width) != (mask.height, mask.width):
        raise DimensionError(
            f"mask {mask.width}x{mask.height} does not match image {img.width}x{img.height}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    blend = alpha * np.asarray(color, dtype=np.float64) + (1.0 - alpha) * img.pixels.astype(np.float64)
    blended = np.floor(blend + 0.5).astype(np.uint8)  # round half up, per-channel
    out = img.pixels.copy()
    out[mask.bits] = blended[mask.bits]
    return RgbImage(out)
