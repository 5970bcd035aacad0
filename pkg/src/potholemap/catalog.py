"""Ingestion and persistence of the centralized pothole survey records."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from .geodata import GeoPoint

CSV_FIELDS = ("id", "lat", "lon", "area_m2", "depth_mm", "reported", "repaired", "image")
JSONL_FIELDS = CSV_FIELDS + ("sector",)


class CatalogError(ValueError):
    """Raised for unrecoverable catalog problems (duplicate ids, corrupt files)."""


@dataclass(frozen=True)
class PotholeRecord:
    """One pothole: identity, geolocation, measurements, and repair dates."""

    id: str
    location: GeoPoint | None = None
    image_path: str | None = None
    area_m2: float | None = None
    depth_mm: float | None = None
    reported_date: date | None = None
    repaired_date: date | None = None
    sector: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("record id must be non-empty")
        if self.area_m2 is not None and self.area_m2 < 0:
            raise ValueError(f"record {self.id}: area must be >= 0")
        if self.depth_mm is not None and self.depth_mm < 0:
            raise ValueError(f"record {self.id}: depth must be >= 0")
        if (
            self.repaired_date is not None
            and self.reported_date is not None
            and self.repaired_date < self.reported_date
        ):
            raise ValueError(f"record {self.id}: repaired before reported")


@dataclass
class SurveyCatalog:
    """Ordered collection of records with unique ids."""

    records: list[PotholeRecord] = field(default_factory=list)
    source_note: str = ""

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise CatalogError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, record_id: str) -> PotholeRecord | None:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        return None


@dataclass(frozen=True)
class RejectedRow:
    line_no: int
    row: dict[str, str]
    reason: str


def _parse_optional_float(raw: str, name: str) -> float | None:
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} is not a number: {raw!r}") from None


def _parse_optional_date(raw: str, name: str) -> date | None:
    if raw == "":
        return None
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise ValueError(f"{name} is not an ISO date: {raw!r}") from None


def _record_from_row(row: dict[str, str]) -> PotholeRecord:
    rid = (row.get("id") or "").strip()
    if not rid:
        raise ValueError("missing id")
    lat = _parse_optional_float((row.get("lat") or "").strip(), "lat")
    lon = _parse_optional_float((row.get("lon") or "").strip(), "lon")
    if (lat is None) != (lon is None):
        raise ValueError("lat and lon must be supplied together")
    location = GeoPoint(lat=lat, lon=lon) if lat is not None else None
    return PotholeRecord(
        id=rid,
        location=location,
        image_path=(row.get("image") or "").strip() or None,
        area_m2=_parse_optional_float((row.get("area_m2") or "").strip(), "area_m2"),
        depth_mm=_parse_optional_float((row.get("depth_mm") or "").strip(), "depth_mm"),
        reported_date=_parse_optional_date((row.get("reported") or "").strip(), "reported"),
        repaired_date=_parse_optional_date((row.get("repaired") or "").strip(), "repaired"),
        sector=(row.get("sector") or "").strip() or None,
    )


def ingest_csv(path: str | Path) -> tuple[SurveyCatalog, list[RejectedRow]]:
    """Read survey rows from CSV; malformed rows land in the reject list.

    A duplicate id among accepted rows aborts ingestion with CatalogError.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_FIELDS if c not in header]
        if missing:
            raise CatalogError(f"{path}: CSV header lacks columns {missing}")
        records: list[PotholeRecord] = []
        rejected: list[RejectedRow] = []
        seen: set[str] = set()
        for line_no, row in enumerate(reader, start=2):
            try:
                rec = _record_from_row(row)
            except ValueError as exc:
                rejected.append(RejectedRow(line_no, dict(row), str(exc)))
                continue
            if rec.id in seen:
                raise CatalogError(f"{path}: duplicate record id {rec.id!r} at line {line_no}")
            seen.add(rec.id)
            records.append(rec)
    return SurveyCatalog(records=records, source_note=str(path)), rejected


def _record_to_jsonable(rec: PotholeRecord) -> dict:
    return {
        "id": rec.id,
        "lat": None if rec.location is None else rec.location.lat,
        "lon": None if rec.location is None else rec.location.lon,
        "area_m2": rec.area_m2,
        "depth_mm": rec.depth_mm,
        "reported": rec.reported_date.isoformat() if rec.reported_date else None,
        "repaired": rec.repaired_date.isoformat() if rec.repaired_date else None,
        "image": rec.image_path,
        "sector": rec.sector,
    }


def _record_from_jsonable(data: dict) -> PotholeRecord:
    lat, lon = data.get("lat"), data.get("lon")
    if (lat is None) != (lon is None):
        raise ValueError("lat and lon must be supplied together")
    return PotholeRecord(
        id=data["id"],
        location=GeoPoint(lat=lat, lon=lon) if lat is not None else None,
        image_path=data.get("image"),
        area_m2=data.get("area_m2"),
        depth_mm=data.get("depth_mm"),
        reported_date=date.fromisoformat(data["reported"]) if data.get("reported") else None,
        repaired_date=date.fromisoformat(data["repaired"]) if data.get("repaired") else None,
        sector=data.get("sector"),
    )


def save_catalog(cat: SurveyCatalog, path: str | Path) -> None:
    """Write line-delimited JSON with a fixed field order; output is deterministic."""
    lines = [json.dumps(_record_to_jsonable(rec), separators=(",", ":")) for rec in cat.records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_catalog(path: str | Path) -> SurveyCatalog:
    """Read a line-delimited JSON catalog; errors cite the offending line."""
    path = Path(path)
    records = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(_record_from_jsonable(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CatalogError(f"{path}: malformed record at line {line_no}: {exc}") from exc
    return SurveyCatalog(records=records, source_note=str(path))


def with_record_updates(cat: SurveyCatalog, updates: dict[str, dict]) -> SurveyCatalog:
    """New catalog with per-id field updates applied (insertion order preserved)."""
    out = []
    for rec in cat.records:
        if rec.id in updates:
            rec = replace(rec, **updates[rec.id])
        out.append(rec)
    return SurveyCatalog(records=out, source_note=cat.source_note)
