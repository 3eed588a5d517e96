"""Chart rendering for reports: a reference-count bar chart and, for plain
coverage reports, a lifecycle distribution chart, written as PNG files next to
whatever textual output the caller asked for."""

from __future__ import annotations

from pathlib import Path

from .codegen import slugify
from .coverage import CoverageReport, DeltaReport


def render_figures(report: CoverageReport | DeltaReport, directory: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    labels = [slugify(row.requirement_id) for row in report.rows]
    impl = [row.impl_count for row in report.rows]
    test = [row.test_count for row in report.rows]
    delta = isinstance(report, DeltaReport)

    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels) + 2), 3.5))
    positions = range(len(labels))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], impl, width, label="implementation")
    ax.bar([p + width / 2 for p in positions], test, width, label="test")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("references (new)" if delta else "references")
    ax.set_title("New references vs baseline" if delta else "Trace reference coverage")
    ax.legend()
    fig.tight_layout()
    target = out_dir / ("delta.png" if delta else "coverage.png")
    fig.savefig(target)
    plt.close(fig)
    written.append(target)

    if isinstance(report, CoverageReport):
        d = report.lifecycle_distribution
        fig, ax = plt.subplots(figsize=(4.0, 3.5))
        ax.bar(["Active", "Deprecated"], [d["active"], d["deprecated"]], color=["#2a7", "#d83"])
        ax.set_ylabel("Traceables")
        ax.set_title("Lifecycle distribution")
        fig.tight_layout()
        target = out_dir / "lifecycle.png"
        fig.savefig(target)
        plt.close(fig)
        written.append(target)

    return written
