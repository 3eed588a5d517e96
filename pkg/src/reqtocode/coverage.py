"""Per-Traceable reference counts, lifecycle distribution, branch deltas and
the table/JSON renderers."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .codegen import Traceable, slugify
from .errors import ConfigError
from .lifecycle import ACTIVE, DEPRECATED
from .scanner import KIND_IMPLEMENTATION, KIND_TEST, ReferenceIndex, ResolutionResult, resolve
from .vcs import RevisionRef

REPORT_SCHEMA_ID = "reqtocode-report@1"


@dataclass(frozen=True)
class CoverageRow:
    constant_name: str
    requirement_id: str
    impl_count: int
    test_count: int
    state: str


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple[CoverageRow, ...]
    lifecycle_distribution: dict[str, int]
    revision: RevisionRef
    set_filter: str | None = None

    kind = "coverage"


@dataclass(frozen=True)
class DeltaReport:
    rows: tuple[CoverageRow, ...]
    branch: RevisionRef
    baseline: RevisionRef

    kind = "delta"


def _count_rows(
    traceables: list[Traceable], resolution: ResolutionResult, *, keep_empty: bool
) -> tuple[CoverageRow, ...]:
    impl: dict[str, int] = {}
    test: dict[str, int] = {}
    for ref, target in resolution.resolved:
        bucket = impl if ref.kind == KIND_IMPLEMENTATION else test
        bucket[target.constant_name] = bucket.get(target.constant_name, 0) + 1
    rows = []
    for t in sorted(traceables, key=lambda t: t.requirement_id):
        impl_count = impl.get(t.constant_name, 0)
        test_count = test.get(t.constant_name, 0)
        if not keep_empty and impl_count == 0 and test_count == 0:
            continue
        rows.append(
            CoverageRow(
                constant_name=t.constant_name,
                requirement_id=t.requirement_id,
                impl_count=impl_count,
                test_count=test_count,
                state=t.state.state,
            )
        )
    return tuple(rows)


def compute_coverage(
    traceables: list[Traceable],
    resolution: ResolutionResult,
    rev: RevisionRef,
    set_filter: str | None = None,
) -> CoverageReport:
    """One row per current Traceable, zero-reference rows included: an
    unreferenced requirement is a visible gap, not a missing line."""
    selected = [t for t in traceables if set_filter is None or t.set_name == set_filter]
    names = {t.constant_name for t in selected}
    filtered = ResolutionResult(
        resolved=tuple(pair for pair in resolution.resolved if pair[1].constant_name in names),
        deprecated_hits=tuple(
            pair for pair in resolution.deprecated_hits if pair[1].constant_name in names
        ),
        unresolved=resolution.unresolved,
    )
    rows = _count_rows(selected, filtered, keep_empty=True)
    distribution = {
        "active": sum(1 for t in selected if t.state.state == ACTIVE),
        "deprecated": sum(1 for t in selected if t.state.state == DEPRECATED),
        "deprecated_implementation_references": sum(
            1 for ref, _t in filtered.deprecated_hits if ref.kind == KIND_IMPLEMENTATION
        ),
    }
    return CoverageReport(
        rows=rows, lifecycle_distribution=distribution, revision=rev, set_filter=set_filter
    )


def compute_delta(
    branch_index: ReferenceIndex,
    baseline_index: ReferenceIndex,
    traceables: list[Traceable],
    branch: RevisionRef,
    baseline: RevisionRef,
) -> DeltaReport:
    """A reference is new iff its (file, constant, kind) triple is absent from
    the baseline; rows that gained nothing are omitted."""
    known = baseline_index.triples()
    fresh = tuple(
        ref
        for ref in branch_index.references
        if (ref.file, ref.constant_name, ref.kind) not in known
    )
    resolution = resolve(ReferenceIndex(references=fresh), traceables)
    rows = _count_rows(traceables, resolution, keep_empty=False)
    return DeltaReport(rows=rows, branch=branch, baseline=baseline)


def implementation_coverage(report: CoverageReport) -> tuple[int, int]:
    """(rows with at least one implementation reference, total rows)."""
    covered = sum(1 for row in report.rows if row.impl_count > 0)
    return covered, len(report.rows)


def _table(rows: tuple[CoverageRow, ...], headers: tuple[str, str, str, str]) -> list[str]:
    cells = [headers]
    for row in rows:
        cells.append(
            (
                slugify(row.requirement_id),
                str(row.impl_count),
                str(row.test_count),
                row.state,
            )
        )
    widths = [max(len(line[col]) for line in cells) for col in range(4)]
    rendered = []
    for line in cells:
        rendered.append("  ".join(value.ljust(width) for value, width in zip(line, widths)).rstrip())
    return rendered


def _json_rows(rows: tuple[CoverageRow, ...], delta: bool) -> list[dict[str, object]]:
    return [
        {
            "constant_name": row.constant_name,
            "requirement_id": row.requirement_id,
            "slug": slugify(row.requirement_id),
            "impl_count": row.impl_count,
            "test_count": row.test_count,
            "state": row.state,
            "delta": delta,
        }
        for row in rows
    ]


def _ref_json(rev: RevisionRef) -> dict[str, str]:
    return {"name": rev.name, "resolved_id": rev.resolved_id}


def render(
    report: CoverageReport | DeltaReport,
    format: str = "table",
    drift: list | None = None,
) -> str:
    """Render a report; drift findings, when given, become a distinct section
    (table) or a top-level array (json)."""
    from .drift import format_finding  # local import, drift depends on coverage types

    if format == "table":
        lines: list[str] = []
        if isinstance(report, DeltaReport):
            lines.append(f"Delta report: {report.branch.name} vs baseline {report.baseline.name}")
            lines.append("")
            if report.rows:
                lines.extend(
                    _table(
                        report.rows,
                        (
                            "Traceable",
                            "Implementation References (delta)",
                            "Test References (delta)",
                            "Status",
                        ),
                    )
                )
            else:
                lines.append("No new references relative to the baseline.")
        else:
            title = f"Coverage report: {report.revision.name}"
            if report.set_filter:
                title += f" (set {report.set_filter})"
            lines.append(title)
            lines.append("")
            lines.extend(
                _table(
                    report.rows,
                    ("Traceable", "Implementation References", "Test References", "Status"),
                )
            )
            d = report.lifecycle_distribution
            lines.append("")
            lines.append(
                f"Lifecycle: {d['active']} Active, {d['deprecated']} Deprecated; "
                f"{d['deprecated_implementation_references']} implementation reference(s) "
                "to Deprecated Traceables"
            )
        if drift is not None:
            lines.append("")
            lines.append("Drift findings:")
            if drift:
                lines.extend(format_finding(f) for f in drift)
            else:
                lines.append("none")
        return "\n".join(lines) + "\n"

    if format == "json":
        if isinstance(report, DeltaReport):
            payload: dict[str, object] = {
                "schema": REPORT_SCHEMA_ID,
                "kind": report.kind,
                "revision": _ref_json(report.branch),
                "baseline": _ref_json(report.baseline),
                "set_filter": None,
                "rows": _json_rows(report.rows, delta=True),
                "lifecycle_distribution": None,
            }
        else:
            payload = {
                "schema": REPORT_SCHEMA_ID,
                "kind": report.kind,
                "revision": _ref_json(report.revision),
                "baseline": None,
                "set_filter": report.set_filter,
                "rows": _json_rows(report.rows, delta=False),
                "lifecycle_distribution": dict(report.lifecycle_distribution),
            }
        if drift is not None:
            payload["drift"] = [f.as_json() for f in drift]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    raise ConfigError(f"unknown report format {format!r}; use table or json")
