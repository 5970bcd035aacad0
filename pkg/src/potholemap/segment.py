"""End-to-end pothole segmentation pipeline with detector fallback, plus
area, volume, and filling-material estimates."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .edges import CannyParams, ZerocrossParams, canny, zerocross
from .morph import (
    NoPotholeError,
    auto_invert,
    close,
    disk_se,
    fill_holes,
    label_components,
    largest_component,
    overlay_component,
)
from .raster import (
    BinaryImage,
    DimensionError,
    GrayImage,
    Level,
    NoThresholdError,
    RgbImage,
    binarize,
    luminance,
    otsu_level,
)

DETECTOR_POLICIES = ("canny-first", "zerocross-first", "canny", "zerocross")


class UncalibratedError(ValueError):
    """Raised when a metric needs a ground-sample distance that was not supplied."""


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the segmentation pipeline.

    level None means automatic (Otsu) threshold selection.  gsd_m_per_px is
    the meters-per-pixel scale used for area calculations; leave None for
    uncalibrated imagery.
    """

    level: float | None = None
    detector_policy: str = "canny-first"
    canny: CannyParams = field(default_factory=CannyParams)
    zerocross: ZerocrossParams = field(default_factory=ZerocrossParams)
    se_radius: int = 5
    min_area_frac: float = 0.005
    max_area_frac: float = 0.6
    gsd_m_per_px: float | None = None
    overlay_color: tuple[int, int, int] = (0, 0, 255)
    overlay_alpha: float = 0.5

    def __post_init__(self):
        if self.level is not None and not 0.0 <= self.level <= 1.0:
            raise ValueError("level must lie in [0, 1] or be None for automatic")
        if self.detector_policy not in DETECTOR_POLICIES:
            raise ValueError(f"detector_policy must be one of {DETECTOR_POLICIES}")
        if self.se_radius < 0:
            raise ValueError("se_radius must be >= 0")
        if not 0.0 < self.min_area_frac < self.max_area_frac < 1.0:
            raise ValueError("need 0 < min_area_frac < max_area_frac < 1")
        if self.gsd_m_per_px is not None and self.gsd_m_per_px <= 0:
            raise ValueError("gsd_m_per_px must be > 0")
        if not 0.0 <= self.overlay_alpha <= 1.0:
            raise ValueError("overlay_alpha must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "detector_policy": self.detector_policy,
            "canny": {
                "sigma": self.canny.sigma,
                "low_frac": self.canny.low_frac,
                "high_frac": self.canny.high_frac,
            },
            "zerocross": {
                "sigma": self.zerocross.sigma,
                "threshold": self.zerocross.threshold,
            },
            "se_radius": self.se_radius,
            "min_area_frac": self.min_area_frac,
            "max_area_frac": self.max_area_frac,
            "gsd_m_per_px": self.gsd_m_per_px,
            "overlay_color": list(self.overlay_color),
            "overlay_alpha": self.overlay_alpha,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        known = {
            "level",
            "detector_policy",
            "canny",
            "zerocross",
            "se_radius",
            "min_area_frac",
            "max_area_frac",
            "gsd_m_per_px",
            "overlay_color",
            "overlay_alpha",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = dict(data)
        level = kwargs.get("level")
        if level == "auto":
            kwargs["level"] = None
        if "canny" in kwargs:
            kwargs["canny"] = CannyParams(**kwargs["canny"])
        if "zerocross" in kwargs:
            kwargs["zerocross"] = ZerocrossParams(**kwargs["zerocross"])
        if "overlay_color" in kwargs:
            kwargs["overlay_color"] = tuple(kwargs["overlay_color"])
        return cls(**kwargs)


@dataclass(frozen=True)
class PipelineTrace:
    """Provenance of a segmentation: which knobs actually fired."""

    level: float
    detector: str
    inverted: bool
    se_radius: int
    area_fraction: float
    plausible: bool
    fallback_used: bool
    warning: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "detector": self.detector,
            "inverted": self.inverted,
            "se_radius": self.se_radius,
            "area_fraction": self.area_fraction,
            "plausible": self.plausible,
            "fallback_used": self.fallback_used,
            "warning": self.warning,
        }


@dataclass(frozen=True, eq=False)
class PotholeMask:
    """Final segmented region with its provenance trace."""

    mask: BinaryImage
    pixel_count: int
    bounding_box: tuple[int, int, int, int]  # x, y, w, h
    trace: PipelineTrace

    def __post_init__(self):
        if self.pixel_count < 1:
            raise ValueError("a pothole mask must contain at least one pixel")
        if self.pixel_count != self.mask.foreground_count():
            raise ValueError("pixel_count does not match the mask")


@dataclass(frozen=True)
class MaterialEstimate:
    """Filling-material quantities for one pothole."""

    area_m2: float
    volume_m3: float
    mass_tonnes: float
    density_t_per_m3: float
    compaction_factor: float


@dataclass
class _Candidate:
    detector: str
    stages: dict[str, Any]
    mask: BinaryImage | None
    pixel_count: int
    inverted: bool

    @property
    def area_fraction(self) -> float:
        if self.mask is None:
            return 0.0
        return self.pixel_count / self.mask.bits.size


def _run_detector_route(binary: BinaryImage, detector: str, cfg: PipelineConfig) -> _Candidate:
    as_gray = GrayImage(binary.bits.astype(np.float64))
    if detector == "canny":
        edge_map = canny(as_gray, cfg.canny)
    else:
        edge_map = zerocross(as_gray, cfg.zerocross)
    closed = close(edge_map, disk_se(cfg.se_radius))
    oriented, inverted = auto_invert(closed)
    filled = fill_holes(oriented)
    labels = label_components(filled, connectivity=8)
    stages = {"edges": edge_map, "closed": closed, "inverted": oriented, "filled": filled}
    if labels.component_count == 0:
        return _Candidate(detector, stages, None, 0, inverted)
    mask, count = largest_component(labels)
    return _Candidate(detector, stages, mask, count, inverted)


def _bounds_distance(frac: float, lo: float, hi: float) -> float:
    return max(lo - frac, frac - hi, 0.0)


def _bounding_box(mask: BinaryImage) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(mask.bits.any(axis=1))
    cols = np.flatnonzero(mask.bits.any(axis=0))
    y0, y1 = int(rows[0]), int(rows[-1])
    x0, x1 = int(cols[0]), int(cols[-1])
    return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def segment_pothole(
    img: RgbImage, cfg: PipelineConfig = PipelineConfig(), dump_dir: str | Path | None = None
) -> PotholeMask:
    """Run the full pipeline: luminance, binarize, edge detection, closing,
    conditional inversion, hole filling, labeling, largest component.

    Under a *-first policy the preferred detector runs first; when its largest
    component's area fraction falls outside [min_area_frac, max_area_frac] the
    other detector is tried, and if both fail the result nearest the bounds is
    returned with a warning recorded in the trace.
    """
    if img.width < 16 or img.height < 16:
        raise DimensionError(f"pipeline needs at least 16x16, got {img.width}x{img.height}")

    gray = luminance(img)
    if cfg.level is not None:
        level = Level(cfg.level)
    else:
        try:
            level = otsu_level(gray)
        except NoThresholdError as exc:
            raise NoPotholeError(f"no pothole found: {exc}") from exc
    binary = binarize(gray, level)

    lo, hi = cfg.min_area_frac, cfg.max_area_frac
    policy = cfg.detector_policy
    fallback_used = False
    warning = None

    if policy in ("canny", "zerocross"):
        chosen = _run_detector_route(binary, policy, cfg)
        if chosen.mask is None:
            raise NoPotholeError(f"no pothole found: {policy} produced no components")
        if not lo <= chosen.area_fraction <= hi:
            warning = f"{policy} result implausible (area fraction {chosen.area_fraction:.4f})"
    else:
        first = "canny" if policy == "canny-first" else "zerocross"
        second = "zerocross" if first == "canny" else "canny"
        cand1 = _run_detector_route(binary, first, cfg)
        if cand1.mask is not None and lo <= cand1.area_fraction <= hi:
            chosen = cand1
        else:
            cand2 = _run_detector_route(binary, second, cfg)
            fallback_used = True
            if cand2.mask is not None and lo <= cand2.area_fraction <= hi:
                chosen = cand2
            elif cand1.mask is None and cand2.mask is None:
                raise NoPotholeError("no pothole found: neither detector produced components")
            else:
                # Both implausible (or one empty): keep whichever area fraction
                # is nearest the plausibility bounds.
                viable = [c for c in (cand1, cand2) if c.mask is not None]
                chosen = min(viable, key=lambda c: _bounds_distance(c.area_fraction, lo, hi))
                warning = (
                    "no plausible candidate: "
                    + ", ".join(f"{c.detector} area fraction {c.area_fraction:.4f}" for c in viable)
                )

    trace = PipelineTrace(
        level=level.value,
        detector=chosen.detector,
        inverted=chosen.inverted,
        se_radius=cfg.se_radius,
        area_fraction=chosen.area_fraction,
        plausible=lo <= chosen.area_fraction <= hi,
        fallback_used=fallback_used,
        warning=warning,
    )
    result = PotholeMask(
        mask=chosen.mask,
        pixel_count=chosen.pixel_count,
        bounding_box=_bounding_box(chosen.mask),
        trace=trace,
    )

    if dump_dir is not None:
        _dump_stages(Path(dump_dir), img, gray, binary, chosen, result, cfg)
    return result


def _dump_stages(
    out: Path,
    img: RgbImage,
    gray: GrayImage,
    binary: BinaryImage,
    chosen: _Candidate,
    result: PotholeMask,
    cfg: PipelineConfig,
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.save_gray(gray, out / "01_gray.png")
    io.save_binary(binary, out / "02_binary.png")
    io.save_binary(chosen.stages["edges"], out / "03_edges.png")
    io.save_binary(chosen.stages["closed"], out / "04_closed.png")
    io.save_binary(chosen.stages["inverted"], out / "05_inverted.png")
    io.save_binary(chosen.stages["filled"], out / "06_filled.png")
    overlay = overlay_component(img, result.mask, cfg.overlay_color, cfg.overlay_alpha)
    io.save_rgb(overlay, out / "07_overlay.png")


def area_m2(mask: PotholeMask, gsd_m_per_px: float | None) -> float:
    """Physical area: pixel count times the squared meters-per-pixel scale."""
    if gsd_m_per_px is None or gsd_m_per_px <= 0:
        raise UncalibratedError("area requires a positive ground-sample distance (m/px)")
    return mask.pixel_count * gsd_m_per_px * gsd_m_per_px


def material_estimate(
    area: float,
    depth_mm: float,
    density_t_per_m3: float = 2.4,
    compaction: float = 1.25,
) -> MaterialEstimate:
    """Volume (m^3) and compacted fill mass (tonnes) for a pothole."""
    if min(area, depth_mm, density_t_per_m3, compaction) < 0:
        raise ValueError("material inputs must be non-negative")
    volume = area * depth_mm / 1000.0
    mass = volume * density_t_per_m3 * compaction
    return MaterialEstimate(
        area_m2=area,
        volume_m3=volume,
        mass_tonnes=mass,
        density_t_per_m3=density_t_per_m3,
        compaction_factor=compaction,
    )


__all__ = [
    "DETECTOR_POLICIES",
    "MaterialEstimate",
    "NoPotholeError",
    "PipelineConfig",
    "PipelineTrace",
    "PotholeMask",
    "UncalibratedError",
    "area_m2",
    "material_estimate",
    "segment_pothole",
]
