"""GPS extraction, ward/sector geometry, and KML placemark emission."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence
from xml.sax.saxutils import escape

from PIL import Image, UnidentifiedImageError

if TYPE_CHECKING:  # pragma: no cover
    from .catalog import PotholeRecord

GPS_IFD_TAG = 0x8825
_TAG_LAT_REF, _TAG_LAT, _TAG_LON_REF, _TAG_LON = 1, 2, 3, 4

KML_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>'
    '<kml xmlns="http://www.opengis.net/kml/2.2"><Document><name>{ward}</name>'
)
KML_FOOTER = "</Document></kml>"
POINT_PLACEMARK = (
    "<Placemark><name>{id}</name>"
    "<description>{area} sq.m, {depth} mm, sector {sector}, reported {date}</description>"
    "<Point><coordinates>{lon:.6f},{lat:.6f},0</coordinates></Point></Placemark>"
)
POLYGON_PLACEMARK = (
    "<Placemark><name>{name}</name>"
    "<Polygon><outerBoundaryIs><LinearRing><coordinates>{coords}</coordinates>"
    "</LinearRing></outerBoundaryIs></Polygon></Placemark>"
)


class NoGeotagError(ValueError):
    """Raised when an image file carries no EXIF GPS information."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


Polygon = tuple[GeoPoint, ...]


def _validate_polygon(name: str, poly: Sequence[GeoPoint]) -> Polygon:
    poly = tuple(poly)
    if len(poly) < 4 or poly[0] != poly[-1]:
        raise ValueError(f"polygon {name!r} must be explicitly closed with >= 3 distinct vertices")
    return poly


@dataclass(frozen=True)
class SectorMap:
    """A ward boundary plus named sector polygons, in declaration order."""

    ward_name: str
    ward_boundary: Polygon
    sectors: tuple[tuple[str, Polygon], ...]

    def __post_init__(self):
        ward = _validate_polygon("ward", self.ward_boundary)
        object.__setattr__(self, "ward_boundary", ward)
        lats = [p.lat for p in ward]
        lons = [p.lon for p in ward]
        checked = []
        for name, poly in self.sectors:
            poly = _validate_polygon(name, poly)
            for p in poly:
                if not (min(lats) <= p.lat <= max(lats) and min(lons) <= p.lon <= max(lons)):
                    raise ValueError(f"sector {name!r} leaves the ward bounding box")
            checked.append((name, poly))
        object.__setattr__(self, "sectors", tuple(checked))


def load_sector_map(path: str | Path) -> SectorMap:
    """Read a GeoJSON FeatureCollection of named polygons.

    Each feature needs properties.name; the feature with properties.kind ==
    "ward" is the ward boundary, all others are sectors in file order.
    Coordinates are GeoJSON-style [lon, lat] pairs with a closed outer ring.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("type") != "FeatureCollection":
        raise ValueError("sector map must be a GeoJSON FeatureCollection")
    ward_name = None
    ward_boundary = None
    sectors = []
    for feature in data.get("features", []):
        props = feature.get("properties") or {}
        name = props.get("name")
        geom = feature.get("geometry") or {}
        if not name:
            raise ValueError("every sector-map feature needs properties.name")
        if geom.get("type") != "Polygon":
            raise ValueError(f"feature {name!r}: only Polygon geometry is supported")
        ring = [GeoPoint(lat=pt[1], lon=pt[0]) for pt in geom["coordinates"][0]]
        if props.get("kind") == "ward":
            if ward_boundary is not None:
                raise ValueError("sector map defines more than one ward boundary")
            ward_name, ward_boundary = name, ring
        else:
            sectors.append((name, tuple(ring)))
    if ward_boundary is None:
        raise ValueError("sector map defines no feature with kind == 'ward'")
    return SectorMap(ward_name=ward_name, ward_boundary=tuple(ward_boundary), sectors=tuple(sectors))


def parse_exif_gps(image_file: str | Path) -> GeoPoint:
    """Decimal-degree GPS position from a photo's EXIF block.

    deg + min/60 + sec/3600, negated for S and W hemisphere references.
    """
    try:
        with Image.open(image_file) as im:
            ifd = im.getexif().get_ifd(GPS_IFD_TAG)
    except (UnidentifiedImageError, OSError) as exc:
        raise NoGeotagError(f"{image_file}: cannot read image ({exc})") from exc
    needed = (_TAG_LAT_REF, _TAG_LAT, _TAG_LON_REF, _TAG_LON)
    if not ifd or any(tag not in ifd for tag in needed):
        raise NoGeotagError(f"{image_file}: no geotag (missing EXIF GPS tags)")

    def to_degrees(dms, ref: str, negative_ref: str) -> float:
        d, m, s = (float(v) for v in dms)
        value = d + m / 60.0 + s / 3600.0
        return -value if ref.strip().upper() == negative_ref else value

    lat = to_degrees(ifd[_TAG_LAT], str(ifd[_TAG_LAT_REF]), "S")
    lon = to_degrees(ifd[_TAG_LON], str(ifd[_TAG_LON_REF]), "W")
    return GeoPoint(lat=lat, lon=lon)


def point_in_polygon(pt: GeoPoint, poly: Sequence[GeoPoint]) -> bool:
    """Ray-casting parity test in the lon/lat plane; boundary points count as inside."""
    x, y = pt.lon, pt.lat
    crossings = 0
    for a, b in zip(poly, poly[1:]):
        x1, y1, x2, y2 = a.lon, a.lat, b.lon, b.lat
        # On-edge check: collinear and inside the segment's bounding box.
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if cross == 0.0 and min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_hit = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_hit > x:
                crossings += 1
    return crossings % 2 == 1


def assign_sector(pt: GeoPoint, sector_map: SectorMap) -> str | None:
    """First declared sector containing the point, or None."""
    for name, poly in sector_map.sectors:
        if point_in_polygon(pt, poly):
            return name
    return None


@dataclass(frozen=True)
class KmlResult:
    """Emitted KML plus the ids of records that had no coordinates."""

    kml: str
    rejected: tuple[str, ...]


def _format_ring(poly: Polygon) -> str:
    return " ".join(f"{p.lon:.6f},{p.lat:.6f},0" for p in poly)


def write_kml(records: Iterable["PotholeRecord"], sector_map: SectorMap) -> KmlResult:
    """One placemark per geolocated record plus one per sector polygon.

    Records without coordinates are reported in the result's rejected list
    rather than silently dropped.
    """
    parts = [KML_HEADER.format(ward=escape(sector_map.ward_name))]
    rejected = []
    for rec in records:
        if rec.location is None:
            rejected.append(rec.id)
            continue
        area = "n/a" if rec.area_m2 is None else f"{rec.area_m2:.2f}"
        depth = "n/a" if rec.depth_mm is None else f"{rec.depth_mm:.0f}"
        sector = rec.sector if rec.sector else "unassigned"
        date = rec.reported_date.isoformat() if rec.reported_date else "unknown"
        parts.append(
            POINT_PLACEMARK.format(
                id=escape(rec.id),
                area=area,
                depth=depth,
                sector=escape(sector),
                date=date,
                lon=rec.location.lon,
                lat=rec.location.lat,
            )
        )
    for name, poly in sector_map.sectors:
        parts.append(POLYGON_PLACEMARK.format(name=escape(name), coords=_format_ring(poly)))
    parts.append(KML_FOOTER)
    return KmlResult(kml="".join(parts), rejected=tuple(rejected))
