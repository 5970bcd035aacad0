"""Command-line surface: ingest, process, geotag, report, and the combined pipeline."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__, catalog, charts, geodata, io, report
from .morph import NoPotholeError, overlay_component
from .raster import DimensionError
from .segment import DETECTOR_POLICIES, PipelineConfig, material_estimate, segment_pothole

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_ERROR = 2

_CONFIG_EXTRA_KEYS = ("sla_days", "density_t_per_m3", "compaction")


@dataclass
class RunSettings:
    """Pipeline config plus the report/material knobs carried in the manifest."""

    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    sla_days: int = report.DEFAULT_SLA_DAYS
    density_t_per_m3: float = 2.4
    compaction: float = 1.25

    def to_dict(self) -> dict[str, Any]:
        out = self.pipeline.to_dict()
        out["sla_days"] = self.sla_days
        out["density_t_per_m3"] = self.density_t_per_m3
        out["compaction"] = self.compaction
        return out


@dataclass
class RunManifest:
    """Auditable record of one run: config used, per-image results, timestamps."""

    command: str
    config: dict[str, Any]
    images: list[dict[str, Any]] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    def summary(self) -> dict[str, int]:
        ok = sum(1 for e in self.images if e.get("ok"))
        return {"succeeded": ok, "failed": len(self.images) - ok}

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": "potholemap",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "images": self.images,
            "summary": self.summary(),
            **({"notes": self.notes} if self.notes else {}),
        }

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load_settings(config_path: str | None, args: argparse.Namespace) -> RunSettings:
    """Merge the JSON config file (if any) with command-line overrides."""
    data: dict[str, Any] = {}
    if config_path:
        data = json.loads(Path(config_path).read_text(encoding="utf-8"))
    extras = {k: data.pop(k) for k in list(data) if k in _CONFIG_EXTRA_KEYS}

    if getattr(args, "level", None) is not None:
        data["level"] = None if args.level == "auto" else float(args.level)
    if getattr(args, "detector", None) is not None:
        data["detector_policy"] = args.detector
    if getattr(args, "se_radius", None) is not None:
        data["se_radius"] = args.se_radius
    if getattr(args, "gsd", None) is not None:
        data["gsd_m_per_px"] = args.gsd

    settings = RunSettings(pipeline=PipelineConfig.from_dict(data))
    if "sla_days" in extras:
        settings.sla_days = int(extras["sla_days"])
    if "density_t_per_m3" in extras:
        settings.density_t_per_m3 = float(extras["density_t_per_m3"])
    if "compaction" in extras:
        settings.compaction = float(extras["compaction"])
    if getattr(args, "sla_days", None) is not None:
        settings.sla_days = args.sla_days
    return settings


def _process_one(task: tuple[str, str, PipelineConfig, str, bool]) -> dict[str, Any]:
    """Segment one image and write its overlay (and stage dumps); returns a
    manifest entry.  Runs in worker processes, so it must stay picklable."""
    image_id, path_str, cfg, out_dir_str, dump_stages = task
    out_dir = Path(out_dir_str)
    entry: dict[str, Any] = {"id": image_id, "path": path_str, "ok": False}
    try:
        img = io.load_rgb(path_str)
        stage_dir = out_dir / f"{image_id}_stages" if dump_stages else None
        mask = segment_pothole(img, cfg, dump_dir=stage_dir)
        overlay = f"{image_id}_overlay.png"
        io.save_rgb(
            overlay_component(img, mask.mask, cfg.overlay_color, cfg.overlay_alpha),
            out_dir / overlay,
        )
        entry.update(
            ok=True,
            pixel_count=mask.pixel_count,
            bounding_box=list(mask.bounding_box),
            trace=mask.trace.to_dict(),
            overlay=overlay,
        )
        if dump_stages:
            entry["stages"] = f"{image_id}_stages"
        if cfg.gsd_m_per_px is not None:
            entry["area_m2"] = mask.pixel_count * cfg.gsd_m_per_px**2
    except (NoPotholeError, DimensionError, OSError, ValueError) as exc:
        entry["error"] = str(exc)
    return entry


def run_batch(
    images: list[tuple[str, str]],
    cfg: PipelineConfig,
    out_dir: Path,
    dump_stages: bool = False,
    jobs: int = 1,
) -> list[dict[str, Any]]:
    """Process (id, path) pairs, possibly in parallel; results follow input order."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(image_id, path, cfg, str(out_dir), dump_stages) for image_id, path in images]
    if jobs <= 1 or len(tasks) <= 1:
        return [_process_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_process_one, tasks))


def _unique_ids(paths: list[str]) -> list[tuple[str, str]]:
    seen: dict[str, int] = {}
    out = []
    for p in paths:
        stem = Path(p).stem
        n = seen.get(stem, 0)
        seen[stem] = n + 1
        out.append((stem if n == 0 else f"{stem}-{n + 1}", p))
    return out


def cmd_ingest(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cat, rejects = catalog.ingest_csv(args.survey)
    catalog.save_catalog(cat, out_dir / "catalog.jsonl")
    print(f"ingested {len(cat)} records, rejected {len(rejects)}")
    for rej in rejects:
        print(f"  line {rej.line_no}: {rej.reason}")
    print(f"wrote {out_dir / 'catalog.jsonl'}")
    return EXIT_PARTIAL if rejects else EXIT_OK


def cmd_process(args: argparse.Namespace) -> int:
    settings = load_settings(args.config, args)
    out_dir = Path(args.out)
    manifest = RunManifest(command="process", config=settings.to_dict())
    manifest.config["jobs"] = args.jobs
    manifest.config["dump_stages"] = bool(args.dump_stages)
    manifest.started_at = _now()
    entries = run_batch(
        _unique_ids(args.images), settings.pipeline, out_dir, args.dump_stages, args.jobs
    )
    manifest.images = entries
    manifest.finished_at = _now()
    manifest.write(out_dir / "manifest.json")
    summary = manifest.summary()
    print(f"processed {summary['succeeded']} ok, {summary['failed']} failed")
    for e in entries:
        if not e.get("ok"):
            print(f"  {e['id']}: {e.get('error')}")
    print(f"wrote {out_dir / 'manifest.json'}")
    return EXIT_PARTIAL if summary["failed"] else EXIT_OK


def _geotag_records(
    cat: catalog.SurveyCatalog, sector_map: geodata.SectorMap, base_dir: Path
) -> tuple[catalog.SurveyCatalog, list[str]]:
    """Fill coordinates from EXIF where missing, then assign sectors."""
    updates: dict[str, dict] = {}
    exif_tagged = []
    for rec in cat.records:
        loc = rec.location
        if loc is None and rec.image_path:
            try:
                loc = geodata.parse_exif_gps(_resolve(rec.image_path, base_dir))
                exif_tagged.append(rec.id)
            except geodata.NoGeotagError:
                loc = None
        if loc is not None:
            updates[rec.id] = {"location": loc, "sector": geodata.assign_sector(loc, sector_map)}
    return catalog.with_record_updates(cat, updates), exif_tagged


def _resolve(path_str: str, base_dir: Path) -> Path:
    p = Path(path_str)
    return p if p.is_absolute() else base_dir / p


def cmd_geotag(args: argparse.Namespace) -> int:
    cat = catalog.load_catalog(args.catalog)
    sector_map = geodata.load_sector_map(args.sectors)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tagged_cat, _ = _geotag_records(cat, sector_map, Path(args.catalog).parent)
    result = geodata.write_kml(tagged_cat.records, sector_map)
    kml_path = out_dir / "map.kml"
    kml_path.write_text(result.kml, encoding="utf-8")

    tagged = len(tagged_cat) - len(result.rejected)
    print(f"geotagged {tagged} records, {len(result.rejected)} without coordinates")
    for rid in result.rejected:
        print(f"  no coordinates: {rid}")
    print(f"wrote {kml_path}")
    return EXIT_PARTIAL if result.rejected else EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    settings = load_settings(args.config, args)
    cat = catalog.load_catalog(args.catalog)
    out_dir = Path(args.out)
    bundle = report.aggregate_report(cat, sla_days=settings.sla_days)
    written = report.write_report_files(bundle, out_dir)
    if not args.no_charts:
        written += charts.render_report_charts(bundle, out_dir)
    print(
        f"report over {len(cat)} records: sla_fraction {bundle.sla_fraction:.3f} "
        f"at {bundle.sla_days} days"
    )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    settings = load_settings(args.config, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = Path(args.survey).parent

    manifest = RunManifest(command="pipeline", config=settings.to_dict())
    manifest.config["jobs"] = args.jobs
    manifest.config["dump_stages"] = bool(args.dump_stages)
    manifest.started_at = _now()

    # Ingest.
    cat, rejects = catalog.ingest_csv(args.survey)
    manifest.notes["ingest"] = {
        "accepted": len(cat),
        "rejected": [{"line": r.line_no, "reason": r.reason} for r in rejects],
    }

    # Image processing for records that carry an image.
    with_images = [
        (rec.id, str(_resolve(rec.image_path, base_dir))) for rec in cat.records if rec.image_path
    ]
    entries = run_batch(with_images, settings.pipeline, out_dir, args.dump_stages, args.jobs)
    manifest.images = entries

    updates: dict[str, dict] = {}
    gsd = settings.pipeline.gsd_m_per_px
    for entry in entries:
        rec = cat.get(entry["id"])
        if rec is None or not entry.get("ok"):
            continue
        if rec.area_m2 is not None:
            entry["recorded_area_m2"] = rec.area_m2
        if gsd is not None:
            measured = entry["area_m2"]
            if rec.area_m2 is None:
                updates[rec.id] = {"area_m2": measured}
            if rec.depth_mm is not None:
                est = material_estimate(
                    measured, rec.depth_mm, settings.density_t_per_m3, settings.compaction
                )
                entry["volume_m3"] = est.volume_m3
                entry["mass_tonnes"] = est.mass_tonnes
    cat = catalog.with_record_updates(cat, updates)

    # Geotagging and KML.
    sector_map = geodata.load_sector_map(args.sectors)
    cat, exif_tagged = _geotag_records(cat, sector_map, base_dir)
    kml_result = geodata.write_kml(cat.records, sector_map)
    (out_dir / "map.kml").write_text(kml_result.kml, encoding="utf-8")
    manifest.notes["geotag"] = {
        "from_exif": exif_tagged,
        "no_coordinates": list(kml_result.rejected),
    }

    catalog.save_catalog(cat, out_dir / "catalog.jsonl")

    # Reports and charts.
    bundle = report.aggregate_report(cat, sla_days=settings.sla_days)
    report.write_report_files(bundle, out_dir)
    if not args.no_charts:
        charts.render_report_charts(bundle, out_dir)

    manifest.finished_at = _now()
    manifest.write(out_dir / "manifest.json")

    summary = manifest.summary()
    failures = summary["failed"] + len(rejects) + len(kml_result.rejected)
    print(
        f"pipeline: {len(cat)} records, {summary['succeeded']} images segmented, "
        f"{summary['failed']} image failures, {len(rejects)} csv rejects, "
        f"{len(kml_result.rejected)} without coordinates"
    )
    print(f"outputs in {out_dir}")
    return EXIT_PARTIAL if failures else EXIT_OK


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file mirroring the pipeline fields")
    parser.add_argument("--level", help="binarization level in [0,1], or 'auto' (Otsu)")
    parser.add_argument("--detector", choices=list(DETECTOR_POLICIES), help="detector policy")
    parser.add_argument("--se-radius", type=int, help="disk structuring element radius")
    parser.add_argument("--gsd", type=float, help="ground sample distance, meters per pixel")
    parser.add_argument("--dump-stages", action="store_true", help="write per-stage images")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="potholemap",
        description="Segment potholes from road photos, geotag them into KML sector maps, "
        "and produce repair-priority reports.",
    )
    parser.add_argument("--version", action="version", version=f"potholemap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="import a survey CSV into a JSONL catalog")
    p.add_argument("survey", help="CSV with header id,lat,lon,area_m2,depth_mm,reported,repaired,image")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("process", help="segment pothole images and write overlays + manifest")
    p.add_argument("images", nargs="+", help="image files (PNG, PPM/PGM, JPEG)")
    p.add_argument("--out", required=True, help="output directory")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("geotag", help="assign sectors and write a KML map")
    p.add_argument("catalog", help="catalog.jsonl")
    p.add_argument("sectors", help="GeoJSON sector map")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_geotag)

    p = sub.add_parser("report", help="write histogram/matrix/priority CSVs, JSON, and charts")
    p.add_argument("catalog", help="catalog.jsonl")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--sla-days", type=int, help="repair SLA threshold in days")
    p.add_argument("--no-charts", action="store_true", help="skip chart rendering")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="ingest, process, geotag, and report in one run")
    p.add_argument("survey", help="survey CSV")
    p.add_argument("sectors", help="GeoJSON sector map")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sla-days", type=int, help="repair SLA threshold in days")
    p.add_argument("--no-charts", action="store_true", help="skip chart rendering")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
