"""Size bins, category matrix, SLA statistics, and repair-priority ranking."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .catalog import PotholeRecord, SurveyCatalog

DEFAULT_SLA_DAYS = 23


class SizeBin(enum.IntEnum):
    SMALL = 0
    MEDIUM = 1
    LARGE = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


BIN_LABELS = tuple(b.label for b in SizeBin)


def area_bin(area_m2: float) -> SizeBin:
    """Small below 8 sq.m, Medium in [8, 14), Large at 14 sq.m and above."""
    if area_m2 < 0:
        raise ValueError(f"area must be >= 0, got {area_m2}")
    if area_m2 < 8.0:
        return SizeBin.SMALL
    if area_m2 < 14.0:
        return SizeBin.MEDIUM
    return SizeBin.LARGE


def depth_bin(depth_mm: float) -> SizeBin:
    """Small up to 50 mm inclusive, Medium strictly between 50 and 100, Large at 100+."""
    if depth_mm < 0:
        raise ValueError(f"depth must be >= 0, got {depth_mm}")
    if depth_mm <= 50.0:
        return SizeBin.SMALL
    if depth_mm < 100.0:
        return SizeBin.MEDIUM
    return SizeBin.LARGE


def days_to_repair(rec: PotholeRecord) -> int | None:
    """Whole days from reported to repaired, or None while unrepaired."""
    if rec.repaired_date is None or rec.reported_date is None:
        return None
    return (rec.repaired_date - rec.reported_date).days


def priority_score(rec: PotholeRecord) -> int | None:
    """3 * area rank + depth rank (ranks Small=0, Medium=1, Large=2); higher is
    more urgent.  None marks records missing area or depth (unscorable)."""
    if rec.area_m2 is None or rec.depth_mm is None:
        return None
    return 3 * int(area_bin(rec.area_m2)) + int(depth_bin(rec.depth_mm))


@dataclass(frozen=True)
class PriorityEntry:
    rank: int
    id: str
    score: int | None
    area: SizeBin | None
    depth: SizeBin | None
    reported: date | None


@dataclass(frozen=True)
class ReportBundle:
    """All report data: histograms, 3x3 category matrix, SLA stats, priority queue."""

    area_histogram: dict[SizeBin, int]
    depth_histogram: dict[SizeBin, int]
    days_histogram: dict[int, int]
    category_matrix: tuple[tuple[int, int, int], ...]  # [area bin][depth bin]
    sla_days: int
    sla_fraction: float
    priority_queue: tuple[PriorityEntry, ...]


def _sort_key(rec: PotholeRecord):
    score = priority_score(rec)
    reported = rec.reported_date or date.max
    if score is None:
        return (1, 0, reported, rec.id)
    return (0, -score, reported, rec.id)


def aggregate_report(cat: SurveyCatalog, sla_days: int = DEFAULT_SLA_DAYS) -> ReportBundle:
    """Aggregate a catalog into the full report bundle.

    sla_fraction is the share of repaired potholes attended within sla_days;
    with nothing repaired it is vacuously 1.
    """
    area_hist = {b: 0 for b in SizeBin}
    depth_hist = {b: 0 for b in SizeBin}
    days_hist: dict[int, int] = {}
    matrix = [[0, 0, 0] for _ in SizeBin]
    repaired = 0
    within = 0

    for rec in cat.records:
        if rec.area_m2 is not None:
            area_hist[area_bin(rec.area_m2)] += 1
        if rec.depth_mm is not None:
            depth_hist[depth_bin(rec.depth_mm)] += 1
        if rec.area_m2 is not None and rec.depth_mm is not None:
            matrix[int(area_bin(rec.area_m2))][int(depth_bin(rec.depth_mm))] += 1
        days = days_to_repair(rec)
        if days is not None:
            days_hist[days] = days_hist.get(days, 0) + 1
            repaired += 1
            if days <= sla_days:
                within += 1

    queue = []
    for rank, rec in enumerate(sorted(cat.records, key=_sort_key), start=1):
        queue.append(
            PriorityEntry(
                rank=rank,
                id=rec.id,
                score=priority_score(rec),
                area=None if rec.area_m2 is None else area_bin(rec.area_m2),
                depth=None if rec.depth_mm is None else depth_bin(rec.depth_mm),
                reported=rec.reported_date,
            )
        )

    return ReportBundle(
        area_histogram=area_hist,
        depth_histogram=depth_hist,
        days_histogram=dict(sorted(days_hist.items())),
        category_matrix=tuple(tuple(row) for row in matrix),
        sla_days=sla_days,
        sla_fraction=within / repaired if repaired else 1.0,
        priority_queue=tuple(queue),
    )


def bundle_to_jsonable(bundle: ReportBundle) -> dict:
    return {
        "sla_days": bundle.sla_days,
        "sla_fraction": bundle.sla_fraction,
        "area_histogram": {b.label: n for b, n in bundle.area_histogram.items()},
        "depth_histogram": {b.label: n for b, n in bundle.depth_histogram.items()},
        "days_histogram": {str(day): n for day, n in bundle.days_histogram.items()},
        "category_matrix": {
            "rows": "area",
            "cols": "depth",
            "labels": list(BIN_LABELS),
            "counts": [list(row) for row in bundle.category_matrix],
        },
        "priority": [
            {
                "rank": e.rank,
                "id": e.id,
                "score": e.score,
                "area_bin": e.area.label if e.area is not None else None,
                "depth_bin": e.depth.label if e.depth is not None else None,
                "reported": e.reported.isoformat() if e.reported else None,
            }
            for e in bundle.priority_queue
        ],
    }


def write_report_files(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write the five report CSVs plus report.json; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def csv_file(name: str, header: list[str], rows: list[list]) -> None:
        path = out / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        written.append(path)

    csv_file("area_hist.csv", ["bin", "count"], [[b.label, n] for b, n in bundle.area_histogram.items()])
    csv_file("depth_hist.csv", ["bin", "count"], [[b.label, n] for b, n in bundle.depth_histogram.items()])
    csv_file("days_hist.csv", ["day", "count"], [[d, n] for d, n in bundle.days_histogram.items()])
    csv_file(
        "matrix.csv",
        ["area\\depth", *BIN_LABELS],
        [[SizeBin(i).label, *row] for i, row in enumerate(bundle.category_matrix)],
    )
    csv_file(
        "priority.csv",
        ["rank", "id", "score", "area_bin", "depth_bin", "reported"],
        [
            [
                e.rank,
                e.id,
                "" if e.score is None else e.score,
                e.area.label if e.area is not None else "",
                e.depth.label if e.depth is not None else "",
                e.reported.isoformat() if e.reported else "",
            ]
            for e in bundle.priority_queue
        ],
    )

    json_path = out / "report.json"
    json_path.write_text(json.dumps(bundle_to_jsonable(bundle), indent=2) + "\n", encoding="utf-8")
    written.append(json_path)
    return written
