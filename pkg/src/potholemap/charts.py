"""Chart rendering for report bundles: bar charts for the histograms and a pie
chart for the area/depth category split, written as PNG files next to the CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import BIN_LABELS, ReportBundle

BAR_COLOR = "#4878cf"


def _bar_chart(path: Path, title: str, xlabel: str, labels: list[str], counts: list[int]) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(labels)), counts, color=BAR_COLOR)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45 if len(labels) > 8 else 0)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("number of potholes")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def render_report_charts(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write area_hist.png, depth_hist.png, days_hist.png and category_pie.png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "area_hist.png"
    _bar_chart(
        path,
        "Potholes by area bin",
        "area bin",
        list(BIN_LABELS),
        [bundle.area_histogram[b] for b in sorted(bundle.area_histogram)],
    )
    written.append(path)

    path = out / "depth_hist.png"
    _bar_chart(
        path,
        "Potholes by depth bin",
        "depth bin",
        list(BIN_LABELS),
        [bundle.depth_histogram[b] for b in sorted(bundle.depth_histogram)],
    )
    written.append(path)

    path = out / "days_hist.png"
    days = sorted(bundle.days_histogram)
    _bar_chart(
        path,
        "Potholes by days to repair",
        "days to repair",
        [str(d) for d in days],
        [bundle.days_histogram[d] for d in days],
    )
    written.append(path)

    path = out / "category_pie.png"
    labels = []
    counts = []
    for i, row in enumerate(bundle.category_matrix):
        for j, n in enumerate(row):
            if n > 0:
                labels.append(f"{BIN_LABELS[i]} area / {BIN_LABELS[j]} depth")
                counts.append(n)
    fig, ax = plt.subplots(figsize=(6, 6))
    if counts:
        ax.pie(counts, labels=labels, autopct="%d%%", startangle=90)
        ax.set_title("Pothole categories (area x depth)")
    else:
        ax.text(0.5, 0.5, "no categorized potholes", ha="center", va="center")
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)
    return written
