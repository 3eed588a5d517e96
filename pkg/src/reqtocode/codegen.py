"""Turn requirements into deterministic, referenceable constant modules.

Artifacts are rendered from data-driven language profiles (template files plus
a small profile.json) and written under one artifact root:

    <root>/<set_name>/<set_name>.<ext>   constant module
    <root>/<set_name>/markers.<ext>      set-specific reference markers
    <root>/state.reqtocode               lifecycle state file

Every generated file starts with a sentinel comment line; files under the
artifact root without it are treated as foreign and never touched. Generation
is a pure function of its inputs, so identical snapshots produce identical
bytes on any branch.
"""

from __future__ import annotations

import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CollisionError,
    ConfigError,
    ForeignFileError,
    GenerationError,
    ParseError,
    PlacementError,
)
from .lifecycle import DEPRECATED, REMOVED, STATE_REMOVED, TraceableState

log = logging.getLogger("reqtocode")

GENERATION_SENTINEL = "GENERATED BY REQTOCODE — DO NOT EDIT"
STATE_FILE_NAME = "state.reqtocode"
DEFAULT_MAX_NAME_LENGTH = 80

KIND_CONSTANT_MODULE = "constant_module"
KIND_MARKER_DECLARATIONS = "marker_declarations"
KIND_STATE_FILE = "state_file"

_BUILTIN_PROFILE_ROOT = Path(__file__).resolve().parent / "profiles"
_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")
_CONSTANT_NAME_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")
_ABSENT = "-"


def slugify(text: str) -> str:
    """Uppercase, collapse non-alphanumeric runs to one underscore."""
    return re.sub(r"[^A-Z0-9]+", "_", text.upper()).strip("_")


def normalize_name(id: str, title: str, max_length: int = DEFAULT_MAX_NAME_LENGTH) -> str:
    """Compose the constant name: normalized id, underscore, normalized title,
    truncated to max_length without splitting a word where possible."""
    if not id or not title:
        raise ValueError("id and title must be non-empty")
    id_part = slugify(id)
    if not id_part:
        raise ValueError(f"id {id!r} normalizes to nothing")
    title_part = slugify(title)
    if not title_part:
        log.warning("title of %s normalizes to nothing; using id-only constant name", id)
        return id_part
    return _truncate_name(f"{id_part}_{title_part}", max_length, keep_prefix=id_part)


def _truncate_name(full: str, max_length: int, keep_prefix: str) -> str:
    if len(full) <= max_length:
        return full
    # The id prefix is identity; the cap never cuts into it.
    if len(keep_prefix) >= max_length:
        return keep_prefix
    cut = full[:max_length]
    if full[max_length] == "_":
        return cut
    boundary = cut.rfind("_")
    if boundary > len(keep_prefix):
        return cut[:boundary]
    return cut


@dataclass(frozen=True)
class Traceable:
    """The generated projection of one requirement."""

    constant_name: str
    requirement_id: str
    title: str
    state: TraceableState
    set_name: str
    metadata: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not _CONSTANT_NAME_RE.match(self.constant_name):
            raise ValueError(f"bad constant name {self.constant_name!r}")
        if self.state.state == REMOVED:
            raise ValueError("Removed Traceables are never materialized")
        if not self.constant_name.startswith(slugify(self.requirement_id)):
            raise ValueError(
                f"constant name {self.constant_name!r} does not start with "
                f"the normalized id of {self.requirement_id!r}"
            )

    def meta(self, key: str) -> str | None:
        for k, v in self.metadata:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class GeneratedArtifact:
    relative_path: str
    content: str
    kind: str


@dataclass(frozen=True)
class LanguageProfile:
    """Templates and fragments for one target language, loaded from data files."""

    profile_id: str
    file_extension: str
    comment_open: str
    comment_close: str
    deprecation_marker: str | None
    templates: dict[str, str]

    def comment(self, text: str) -> str:
        close = f" {self.comment_close}" if self.comment_close else ""
        return f"{self.comment_open} {text}{close}"


def load_profile(profile_id: str, search_dirs: tuple[Path, ...] = ()) -> LanguageProfile:
    """Load a profile by id, preferring user-supplied directories over built-ins."""
    import json

    for base in (*search_dirs, _BUILTIN_PROFILE_ROOT):
        root = Path(base) / profile_id
        if (root / "profile.json").is_file():
            break
    else:
        raise ConfigError(f"language profile {profile_id!r} not found")
    meta = json.loads((root / "profile.json").read_text(encoding="utf-8"))
    comment_open = meta.get("comment_open", "")
    if not comment_open:
        raise GenerationError(f"profile {profile_id!r} must define comment_open")
    templates = {
        path.stem: path.read_text(encoding="utf-8")
        for path in sorted(root.glob("*.tmpl"))
    }
    for required in ("module_header", "constant_entry", "markers"):
        if required not in templates:
            raise GenerationError(f"profile {profile_id!r} lacks template {required}.tmpl")
    return LanguageProfile(
        profile_id=profile_id,
        file_extension=meta.get("file_extension", "txt"),
        comment_open=comment_open,
        comment_close=meta.get("comment_close", ""),
        deprecation_marker=meta.get("deprecation_marker"),
        templates=templates,
    )


def _substitute(template: str, variables: dict[str, str], context: str) -> str:
    def repl(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in variables:
            raise GenerationError(f"{context}: unknown placeholder {{{{{name}}}}}")
        return variables[name]

    return _PLACEHOLDER_RE.sub(repl, template)


def _marker_suffix(set_name: str) -> str:
    return set_name.rsplit("_", 1)[-1] if "_" in set_name else set_name


def _set_variables(set_name: str) -> dict[str, str]:
    suffix = _marker_suffix(set_name)
    return {
        "set_name": set_name,
        "set_name_slug": slugify(set_name),
        "marker_suffix": suffix,
        "marker_suffix_slug": slugify(suffix),
    }


def _entry_variables(t: Traceable, profile: LanguageProfile, set_vars: dict[str, str]) -> dict[str, str]:
    marker = ""
    if t.state.state == DEPRECATED and profile.deprecation_marker is not None:
        marker = profile.deprecation_marker
    pairs = [f"last_modified={t.meta('last_modified')}"]
    scope = t.meta("scope")
    if scope:
        pairs.append(f"scope={scope}")
    return {
        **set_vars,
        "constant_name": t.constant_name,
        "requirement_id": t.requirement_id,
        "requirement_id_slug": slugify(t.requirement_id),
        "title": t.title,
        "status": (t.meta("status") or "").upper(),
        "deprecation_marker": marker,
        "metadata_comment": profile.comment(", ".join(pairs)),
    }


def _header_block(profile: LanguageProfile, snapshot_hash: str) -> str:
    return (
        profile.comment(GENERATION_SENTINEL)
        + "\n"
        + profile.comment(f"source-snapshot: sha256:{snapshot_hash}")
        + "\n\n"
    )


def _single_trailing_newline(text: str) -> str:
    return text.rstrip("\n") + "\n"


def generate_set(
    set_name: str,
    traceables: list[Traceable],
    profile: LanguageProfile,
    *,
    snapshot_hash: str,
) -> list[GeneratedArtifact]:
    """Emit the constant module and the marker declarations for one set."""
    for t in traceables:
        if t.set_name != set_name:
            raise GenerationError(f"{t.constant_name} belongs to {t.set_name}, not {set_name}")
    ordered = sorted(traceables, key=lambda t: t.requirement_id)
    names: dict[str, str] = {}
    for t in ordered:
        if t.constant_name in names:
            raise CollisionError(
                f"constant name {t.constant_name} generated for both "
                f"{names[t.constant_name]} and {t.requirement_id}"
            )
        names[t.constant_name] = t.requirement_id
    set_vars = _set_variables(set_name)
    header = _header_block(profile, snapshot_hash)
    body = _substitute(profile.templates["module_header"], set_vars, f"{set_name}/module_header")
    for t in ordered:
        body += _substitute(
            profile.templates["constant_entry"],
            _entry_variables(t, profile, set_vars),
            f"{set_name}/constant_entry",
        )
    if "module_footer" in profile.templates:
        body += _substitute(profile.templates["module_footer"], set_vars, f"{set_name}/module_footer")
    markers = _substitute(profile.templates["markers"], set_vars, f"{set_name}/markers")
    ext = profile.file_extension
    return [
        GeneratedArtifact(
            relative_path=f"{set_name}/{set_name}.{ext}",
            content=_single_trailing_newline(header + body),
            kind=KIND_CONSTANT_MODULE,
        ),
        GeneratedArtifact(
            relative_path=f"{set_name}/markers.{ext}",
            content=_single_trailing_newline(header + markers),
            kind=KIND_MARKER_DECLARATIONS,
        ),
    ]


# --- lifecycle state file -------------------------------------------------

@dataclass(frozen=True)
class StateRecord:
    """One state-file row. Non-removed rows cache the requirement content so
    verify and report can rebuild Traceables from a committed tree alone;
    Removed rows keep only the id, so no removed constant name survives
    anywhere under the artifact root."""

    requirement_id: str
    state: TraceableState
    set_name: str | None = None
    constant_name: str | None = None
    category: str | None = None
    status: str | None = None
    last_modified: str | None = None
    scope: str | None = None
    title: str | None = None


_STATE_FIELDS_DOC = (
    "id state deprecated_since grace_remaining set_name constant_name "
    "category status last_modified scope title"
)


def render_state_file(records: list[StateRecord], snapshot_hash: str) -> GeneratedArtifact:
    lines = [
        f"# {GENERATION_SENTINEL}",
        f"# source-snapshot: sha256:{snapshot_hash}",
        f"# fields: {_STATE_FIELDS_DOC}",
    ]
    for rec in sorted(records, key=lambda r: r.requirement_id):
        if rec.state.state == REMOVED:
            lines.append(f"{rec.requirement_id}\t{REMOVED}")
            continue
        grace = rec.state.grace_remaining
        lines.append(
            "\t".join(
                [
                    rec.requirement_id,
                    rec.state.state,
                    rec.state.deprecated_since or _ABSENT,
                    _ABSENT if grace is None else str(grace),
                    rec.set_name or _ABSENT,
                    rec.constant_name or _ABSENT,
                    rec.category or _ABSENT,
                    rec.status or _ABSENT,
                    rec.last_modified or _ABSENT,
                    rec.scope or _ABSENT,
                    rec.title or _ABSENT,
                ]
            )
        )
    return GeneratedArtifact(
        relative_path=STATE_FILE_NAME,
        content="\n".join(lines) + "\n",
        kind=KIND_STATE_FILE,
    )


def parse_state_file(text: str, origin: str = STATE_FILE_NAME) -> list[StateRecord]:
    records: list[StateRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) == 2 and cols[1] == REMOVED:
            records.append(StateRecord(requirement_id=cols[0], state=STATE_REMOVED))
            continue
        if len(cols) != 11:
            raise ParseError(f"{origin}:{lineno}: expected 11 fields, got {len(cols)}")
        state_name = cols[1]
        if state_name == DEPRECATED:
            try:
                grace = int(cols[3])
            except ValueError:
                raise ParseError(f"{origin}:{lineno}: bad grace_remaining {cols[3]!r}") from None
            state = TraceableState(
                DEPRECATED,
                deprecated_since=None if cols[2] == _ABSENT else cols[2],
                grace_remaining=grace,
            )
        elif state_name in ("Active",):
            state = TraceableState(state_name)
        else:
            raise ParseError(f"{origin}:{lineno}: unknown state {state_name!r}")
        records.append(
            StateRecord(
                requirement_id=cols[0],
                state=state,
                set_name=None if cols[4] == _ABSENT else cols[4],
                constant_name=None if cols[5] == _ABSENT else cols[5],
                category=None if cols[6] == _ABSENT else cols[6],
                status=None if cols[7] == _ABSENT else cols[7],
                last_modified=None if cols[8] == _ABSENT else cols[8],
                scope=None if cols[9] == _ABSENT else cols[9],
                title=None if cols[10] == _ABSENT else cols[10],
            )
        )
    return records


def assign_constant_names(
    records: list[StateRecord], max_length: int = DEFAULT_MAX_NAME_LENGTH
) -> list[StateRecord]:
    """Fill constant_name on every non-removed record.

    Distinct ids whose full normalized names are identical are a hard error;
    names that collide only after truncation get a deterministic numeric
    suffix in ascending requirement-id order."""
    from dataclasses import replace

    eligible = [r for r in records if r.state.state != REMOVED]
    full_names: dict[str, str] = {}
    for rec in eligible:
        assert rec.title is not None
        full = f"{slugify(rec.requirement_id)}_{slugify(rec.title)}".strip("_")
        if full in full_names:
            raise CollisionError(
                f"requirements {full_names[full]} and {rec.requirement_id} "
                f"normalize to the same constant name {full}"
            )
        full_names[full] = rec.requirement_id

    by_name: dict[str, list[StateRecord]] = {}
    for rec in sorted(eligible, key=lambda r: r.requirement_id):
        assert rec.title is not None
        by_name.setdefault(normalize_name(rec.requirement_id, rec.title, max_length), []).append(rec)

    assigned: dict[str, str] = {}
    taken: set[str] = set()
    for base, group in by_name.items():
        for position, rec in enumerate(group):
            if position == 0:
                name = base
            else:
                suffix = f"_{position + 1}"
                assert rec.title is not None
                prefix = slugify(rec.requirement_id)
                full = f"{prefix}_{slugify(rec.title)}"
                name = _truncate_name(full, max_length - len(suffix), keep_prefix=prefix) + suffix
            if name in taken:
                raise CollisionError(
                    f"cannot disambiguate constant name {name} for {rec.requirement_id}"
                )
            taken.add(name)
            assigned[rec.requirement_id] = name

    out: list[StateRecord] = []
    for rec in records:
        if rec.state.state == REMOVED:
            out.append(rec)
        else:
            out.append(replace(rec, constant_name=assigned[rec.requirement_id]))
    return sorted(out, key=lambda r: r.requirement_id)


def build_traceables(records: list[StateRecord]) -> list[Traceable]:
    """Materialize Traceables from state records; Removed rows are omitted."""
    out: list[Traceable] = []
    for rec in sorted(records, key=lambda r: r.requirement_id):
        if rec.state.state == REMOVED:
            continue
        if not (rec.constant_name and rec.set_name and rec.title and rec.status and rec.last_modified):
            raise ParseError(f"state record for {rec.requirement_id} is incomplete")
        metadata: list[tuple[str, str]] = [
            ("status", rec.status),
            ("last_modified", rec.last_modified),
        ]
        if rec.scope:
            metadata.append(("scope", rec.scope))
        out.append(
            Traceable(
                constant_name=rec.constant_name,
                requirement_id=rec.requirement_id,
                title=rec.title,
                state=rec.state,
                set_name=rec.set_name,
                metadata=tuple(metadata),
            )
        )
    return out


def generate_all(
    records: list[StateRecord],
    profile: LanguageProfile,
    snapshot_hash: str,
) -> list[GeneratedArtifact]:
    """Generate every set module, every marker file and the state file."""
    traceables = build_traceables(records)
    by_set: dict[str, list[Traceable]] = {}
    for t in traceables:
        by_set.setdefault(t.set_name, []).append(t)
    artifacts: list[GeneratedArtifact] = []
    for set_name in sorted(by_set):
        artifacts.extend(
            generate_set(set_name, by_set[set_name], profile, snapshot_hash=snapshot_hash)
        )
    artifacts.append(render_state_file(records, snapshot_hash))
    return artifacts


# --- workspace update ------------------------------------------------------

@dataclass
class WritePlan:
    creates: list[str] = field(default_factory=list)
    overwrites: list[str] = field(default_factory=list)
    deletions: list[str] = field(default_factory=list)
    contents: dict[str, str] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.creates or self.overwrites or self.deletions)


def _inside_working_tree(artifact_root: Path) -> bool:
    probe = artifact_root.resolve()
    while not probe.exists() and probe != probe.parent:
        probe = probe.parent
    for candidate in (probe, *probe.parents):
        if (candidate / ".git").exists():
            return True
    return False


def _is_generated(path: Path) -> bool:
    try:
        head = path.read_bytes()[:4096]
    except OSError:
        return False
    return GENERATION_SENTINEL.encode("utf-8") in head


def plan_workspace_update(artifacts: list[GeneratedArtifact], artifact_root: Path) -> WritePlan:
    """Diff desired artifacts against the artifact root. The root is wholly
    tool-managed: files without the generation sentinel abort the plan."""
    root = Path(artifact_root)
    if not _inside_working_tree(root):
        raise PlacementError(f"artifact root {root} is not inside a version-controlled tree")
    desired = {a.relative_path: a.content for a in artifacts}
    if len(desired) != len(artifacts):
        raise GenerationError("duplicate artifact paths in generation output")
    existing: dict[str, Path] = {}
    foreign: list[str] = []
    if root.is_dir():
        for path in sorted(root.rglob("*")):
            if not path.is_file():
                continue
            rel = path.relative_to(root).as_posix()
            if _is_generated(path):
                existing[rel] = path
            else:
                foreign.append(rel)
    if foreign:
        raise ForeignFileError(
            "refusing to manage foreign files under the artifact root "
            f"(no generation sentinel): {', '.join(foreign)}"
        )
    plan = WritePlan(contents=dict(desired))
    for rel in sorted(desired):
        if rel not in existing:
            plan.creates.append(rel)
        elif existing[rel].read_text(encoding="utf-8") != desired[rel]:
            plan.overwrites.append(rel)
    for rel in sorted(existing):
        if rel not in desired:
            plan.deletions.append(rel)
    return plan


def apply_write_plan(plan: WritePlan, artifact_root: Path) -> None:
    """Write and delete per the plan; each file lands atomically via a temp
    file and rename so a crash never leaves half-written artifacts."""
    root = Path(artifact_root)
    for rel in plan.creates + plan.overwrites:
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=".reqtocode-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(plan.contents[rel])
            os.replace(tmp_name, target)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    for rel in plan.deletions:
        target = root / rel
        if target.exists():
            target.unlink()
    if root.is_dir():
        for directory in sorted((p for p in root.rglob("*") if p.is_dir()), reverse=True):
            if not any(directory.iterdir()):
                directory.rmdir()
