"""reqtocode: compile requirements into referenceable constants and enforce
trace coverage, lifecycle and drift rules as build gates."""

from .codegen import (
    GeneratedArtifact,
    LanguageProfile,
    StateRecord,
    Traceable,
    WritePlan,
    generate_set,
    normalize_name,
    plan_workspace_update,
)
from .coverage import CoverageReport, CoverageRow, DeltaReport, compute_coverage, compute_delta, render
from .drift import DriftFinding, detect_drift
from .lifecycle import LifecycleConfig, TraceableState, absent_requirement_state, derive_state
from .scanner import MarkerGrammar, ReferenceIndex, TraceReference, resolve, scan_file, scan_tree
from .sources import (
    PartitionRule,
    Requirement,
    SourceSnapshot,
    load_from_files,
    load_from_mock_alm,
    partition,
)
from .vcs import WORKTREE, GitRepo, RevisionRef

__version__ = "0.1.0"

__all__ = [
    "CoverageReport",
    "CoverageRow",
    "DeltaReport",
    "DriftFinding",
    "GeneratedArtifact",
    "GitRepo",
    "LanguageProfile",
    "LifecycleConfig",
    "MarkerGrammar",
    "PartitionRule",
    "ReferenceIndex",
    "Requirement",
    "RevisionRef",
    "SourceSnapshot",
    "StateRecord",
    "TraceReference",
    "Traceable",
    "TraceableState",
    "WORKTREE",
    "WritePlan",
    "absent_requirement_state",
    "compute_coverage",
    "compute_delta",
    "derive_state",
    "detect_drift",
    "generate_set",
    "load_from_files",
    "load_from_mock_alm",
    "normalize_name",
    "partition",
    "plan_workspace_update",
    "render",
    "resolve",
    "scan_file",
    "scan_tree",
    "__version__",
]
