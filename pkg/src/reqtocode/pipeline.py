"""Glue between the CLI subcommands and the library modules: snapshot loading,
state advancement across one sync cycle, and per-revision scan assembly."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .codegen import (
    STATE_FILE_NAME,
    StateRecord,
    Traceable,
    apply_write_plan,
    assign_constant_names,
    build_traceables,
    generate_all,
    load_profile,
    parse_state_file,
    plan_workspace_update,
    slugify,
    WritePlan,
)
from .config import SOURCE_FILES, ToolConfig
from .errors import ConfigError
from .lifecycle import REMOVED, STATE_REMOVED, TraceableState, absent_requirement_state, derive_state
from .scanner import ReferenceIndex, ResolutionResult, resolve, scan_tree
from .sources import (
    SourceFormat,
    SourceSnapshot,
    format_timestamp,
    load_from_files,
    load_from_mock_alm,
    partition,
)
from .vcs import GitRepo, RevisionRef

ALM_TOKEN_ENV = "REQTOCODE_ALM_TOKEN"


def load_snapshot(cfg: ToolConfig) -> SourceSnapshot:
    fmt = SourceFormat(glob=cfg.source_glob, vocabulary=cfg.vocabulary)
    if cfg.source_kind == SOURCE_FILES:
        return load_from_files(cfg.repo_root / cfg.source_path, fmt)
    endpoint = cfg.source_path
    if not endpoint.startswith(("http://", "https://")):
        # Local payload files resolve like every other configured path.
        endpoint = str(cfg.repo_root / endpoint)
    return load_from_mock_alm(
        endpoint,
        auth_token=os.environ.get(ALM_TOKEN_ENV),
        format_config=fmt,
    )


def _describe(state: TraceableState | None) -> str:
    if state is None:
        return "new"
    if state.state == "Deprecated":
        return f"Deprecated (grace {state.grace_remaining})"
    return state.state


def advance_records(
    snapshot: SourceSnapshot,
    set_of: dict[str, str],
    prior: list[StateRecord],
    cfg: ToolConfig,
) -> tuple[list[StateRecord], list[str]]:
    """Run one lifecycle cycle over the snapshot plus every previously-known id."""
    prior_by_id = {r.requirement_id: r for r in prior}
    records: list[StateRecord] = []
    transitions: list[str] = []

    def note(req_id: str, before: TraceableState | None, after: TraceableState) -> None:
        if before is None or before != after:
            transitions.append(f"{req_id}: {_describe(before)} -> {_describe(after)}")

    for req in snapshot.requirements:
        prev = prior_by_id.get(req.id)
        prev_state = prev.state if prev else None
        stamp = format_timestamp(req.last_modified)
        new_state = derive_state(req.status, prev_state, cfg.lifecycle, entered_at=stamp)
        if new_state.state == REMOVED:
            records.append(StateRecord(requirement_id=req.id, state=STATE_REMOVED))
        else:
            records.append(
                StateRecord(
                    requirement_id=req.id,
                    state=new_state,
                    set_name=set_of[req.id],
                    category=req.category,
                    status=req.status,
                    last_modified=stamp,
                    scope=req.scope,
                    title=req.title,
                )
            )
        note(req.id, prev_state, new_state)

    present = {req.id for req in snapshot.requirements}
    for rec in sorted(prior, key=lambda r: r.requirement_id):
        if rec.requirement_id in present:
            continue
        new_state = absent_requirement_state(rec.state, cfg.lifecycle, entered_at=rec.last_modified)
        if new_state.state == REMOVED:
            records.append(StateRecord(requirement_id=rec.requirement_id, state=STATE_REMOVED))
        else:
            records.append(replace(rec, state=new_state))
        note(rec.requirement_id, rec.state, new_state)

    return assign_constant_names(records, cfg.max_name_length), transitions


@dataclass
class SyncResult:
    snapshot: SourceSnapshot
    records: list[StateRecord]
    transitions: list[str]
    plan: WritePlan


def run_sync(cfg: ToolConfig) -> SyncResult:
    """Load, advance one cycle, regenerate, apply the write plan."""
    snapshot = load_snapshot(cfg)
    partitions = partition(snapshot, list(cfg.rules))
    set_of = {req.id: name for name, reqs in partitions for req in reqs}
    artifact_root = cfg.repo_root / cfg.artifact_root
    state_path = artifact_root / STATE_FILE_NAME
    prior = (
        parse_state_file(state_path.read_text(encoding="utf-8"), origin=str(state_path))
        if state_path.is_file()
        else []
    )
    records, transitions = advance_records(snapshot, set_of, prior, cfg)
    profile = load_profile(cfg.profile_id, cfg.profile_dirs)
    artifacts = generate_all(records, profile, snapshot.content_hash())
    plan = plan_workspace_update(artifacts, artifact_root)
    apply_write_plan(plan, artifact_root)
    return SyncResult(snapshot=snapshot, records=records, transitions=transitions, plan=plan)


@dataclass
class RevisionContext:
    rev: RevisionRef
    tree: dict[str, bytes]
    records: list[StateRecord]
    traceables: list[Traceable]
    slugs: frozenset[str]
    index: ReferenceIndex
    resolution: ResolutionResult


def revision_context(cfg: ToolConfig, repo: GitRepo, rev: RevisionRef) -> RevisionContext:
    """Rebuild Traceables from the committed state file at rev and scan that tree."""
    tree = repo.read_tree(rev)
    state_key = f"{cfg.artifact_root}/{STATE_FILE_NAME}"
    data = tree.get(state_key)
    if data is None:
        raise ConfigError(f"no {state_key} at revision {rev.name}; run sync and commit first")
    records = parse_state_file(data.decode("utf-8"), origin=f"{rev.name}:{state_key}")
    traceables = build_traceables(records)
    slugs = frozenset(slugify(r.requirement_id) for r in records)
    index = scan_tree(tree, cfg.scan_config(), cfg.grammar(slugs))
    resolution = resolve(index, traceables)
    return RevisionContext(
        rev=rev,
        tree=tree,
        records=records,
        traceables=traceables,
        slugs=slugs,
        index=index,
        resolution=resolution,
    )
