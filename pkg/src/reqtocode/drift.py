"""Bidirectional drift: compare each requirement's last-modified time with the
newest commit touching its referencing code. Findings are signals for review,
never build errors by themselves."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timedelta

from .codegen import Traceable
from .scanner import ResolutionResult
from .sources import format_timestamp, parse_timestamp
from .vcs import GitRepo, RevisionRef

log = logging.getLogger("reqtocode")

REQUIREMENT_NEWER = "RequirementNewer"
CODE_NEWER = "CodeNewer"


@dataclass(frozen=True)
class DriftFinding:
    requirement_id: str
    direction: str
    requirement_time: datetime
    code_time: datetime
    evidence_files: tuple[str, ...]

    def as_json(self) -> dict[str, object]:
        return {
            "requirement_id": self.requirement_id,
            "direction": self.direction,
            "requirement_time": format_timestamp(self.requirement_time),
            "code_time": format_timestamp(self.code_time),
            "evidence_files": list(self.evidence_files),
        }


def format_finding(finding: DriftFinding) -> str:
    return (
        f"DRIFT {finding.requirement_id} {finding.direction} "
        f"requirement={format_timestamp(finding.requirement_time)} "
        f"code={format_timestamp(finding.code_time)} "
        f"evidence={','.join(finding.evidence_files)}"
    )


def detect_drift(
    traceables: list[Traceable],
    resolution: ResolutionResult,
    rev: RevisionRef,
    vcs: GitRepo,
    tolerance: timedelta = timedelta(0),
) -> list[DriftFinding]:
    """One finding per referenced Traceable whose timestamps disagree beyond
    the tolerance. Unreferenced Traceables never drift; they show up as 0/0
    coverage rows instead."""
    evidence: dict[str, set[str]] = {}
    for ref, target in resolution.resolved:
        evidence.setdefault(target.constant_name, set()).add(ref.file)
    findings: list[DriftFinding] = []
    for t in sorted(traceables, key=lambda t: t.requirement_id):
        files = sorted(evidence.get(t.constant_name, ()))
        if not files:
            continue
        raw = t.meta("last_modified")
        if not raw:
            log.warning("%s has no last_modified metadata; skipping drift check", t.requirement_id)
            continue
        requirement_time = parse_timestamp(raw)
        code_time = max(vcs.last_commit_time(rev, path) for path in files)
        if requirement_time > code_time + tolerance:
            direction = REQUIREMENT_NEWER
        elif code_time > requirement_time + tolerance:
            direction = CODE_NEWER
        else:
            continue
        findings.append(
            DriftFinding(
                requirement_id=t.requirement_id,
                direction=direction,
                requirement_time=requirement_time,
                code_time=code_time,
                evidence_files=tuple(files),
            )
        )
    return findings
