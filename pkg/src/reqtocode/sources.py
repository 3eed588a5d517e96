"""Load requirement definitions into a canonical, validated snapshot.

Two origins are supported: a directory of requirement files (front-matter
blocks) and a mock ALM endpoint serving a JSON payload over HTTP or from a
local file. Both produce the same in-memory form, ordered by requirement id,
so everything downstream is origin-agnostic.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fnmatch import fnmatch
from pathlib import Path

import requests

from .errors import (
    ParseError,
    PartitionError,
    SchemaError,
    TransportError,
    ValidationError,
)

log = logging.getLogger("reqtocode")

DEFAULT_STATUS_VOCABULARY: tuple[str, ...] = ("Draft", "Approved", "Deprecated", "Removed")

_FRONT_MATTER_DELIMITER = "---"
_REQUIRED_KEYS = ("id", "title", "status", "last_modified", "category")


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive values are taken as UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    parsed = datetime.fromisoformat(raw)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    """Render a UTC timestamp at second precision, Z-suffixed."""
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class Requirement:
    """One requirement as read from the source, already normalized."""

    id: str
    title: str
    status: str
    last_modified: datetime
    category: str
    scope: str | None = None
    # Where this requirement came from; diagnostic only, excluded from equality.
    location: str = field(default="", compare=False)


@dataclass(frozen=True)
class SourceSnapshot:
    requirements: tuple[Requirement, ...]
    taken_at: datetime
    source_id: str

    def canonical_json(self) -> str:
        """Content-only serialization: stable across origins and load times."""
        rows = []
        for req in self.requirements:
            row: dict[str, str] = {
                "id": req.id,
                "title": req.title,
                "status": req.status,
                "last_modified": format_timestamp(req.last_modified),
                "category": req.category,
            }
            if req.scope is not None:
                row["scope"] = req.scope
            rows.append(row)
        return json.dumps({"requirements": rows}, sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SourceFormat:
    """Parse configuration for the file-based source."""

    glob: str = "*.md"
    vocabulary: tuple[str, ...] = DEFAULT_STATUS_VOCABULARY


def _parse_front_matter(path: Path) -> tuple[dict[str, str], dict[str, int]]:
    """Return key->value and key->line-number maps for one requirement file."""
    lines = path.read_text(encoding="utf-8").splitlines()
    index = 0
    while index < len(lines) and not lines[index].strip():
        index += 1
    if index >= len(lines) or lines[index].strip() != _FRONT_MATTER_DELIMITER:
        raise ParseError(f"{path}:1: missing front-matter delimiter '---'")
    values: dict[str, str] = {}
    positions: dict[str, int] = {}
    index += 1
    while index < len(lines):
        line = lines[index]
        lineno = index + 1
        if line.strip() == _FRONT_MATTER_DELIMITER:
            return values, positions
        if line.strip():
            key, sep, value = line.partition(":")
            if not sep or not key.strip():
                raise ParseError(f"{path}:{lineno}: expected 'key: value', got {line.strip()!r}")
            key = key.strip()
            if key in values:
                raise ParseError(f"{path}:{lineno}: duplicate front-matter key {key!r}")
            values[key] = value.strip()
            positions[key] = lineno
        index += 1
    raise ParseError(f"{path}:{len(lines)}: unterminated front-matter block")


def _requirement_from_fields(
    fields: dict[str, str],
    positions: dict[str, int],
    path: Path,
    vocabulary: tuple[str, ...],
) -> Requirement:
    for key in _REQUIRED_KEYS:
        if key not in fields or not fields[key]:
            raise ParseError(f"{path}:1: missing required front-matter key {key!r}")
    title = collapse_whitespace(fields["title"])
    if not title:
        raise ValidationError(f"{path}: title is empty after trimming")
    status = fields["status"]
    if status not in vocabulary:
        raise ValidationError(
            f"{path}:{positions['status']}: unknown status {status!r}; "
            f"vocabulary is {', '.join(vocabulary)}"
        )
    try:
        last_modified = parse_timestamp(fields["last_modified"])
    except ValueError:
        lineno = positions["last_modified"]
        raise ParseError(
            f"{path}:{lineno}: last_modified {fields['last_modified']!r} is not a valid timestamp"
        ) from None
    return Requirement(
        id=fields["id"],
        title=title,
        status=status,
        last_modified=last_modified,
        category=fields["category"],
        scope=fields.get("scope") or None,
        location=str(path),
    )


def _finish_snapshot(requirements: list[Requirement], source_id: str) -> SourceSnapshot:
    seen: dict[str, Requirement] = {}
    for req in requirements:
        if not req.id:
            raise ValidationError(f"{req.location}: requirement id is empty")
        other = seen.get(req.id)
        if other is not None:
            raise ValidationError(
                f"duplicate requirement id {req.id!r} defined at "
                f"{other.location} and {req.location}"
            )
        seen[req.id] = req
    ordered = tuple(sorted(requirements, key=lambda r: r.id))
    taken_at = datetime.now(timezone.utc)
    for req in ordered:
        # Clock skew between the source and this host is tolerated, not fatal.
        if req.last_modified > taken_at:
            log.warning("%s: last_modified %s lies in the future", req.id, format_timestamp(req.last_modified))
    return SourceSnapshot(
        requirements=ordered,
        taken_at=taken_at,
        source_id=source_id,
    )


def load_from_files(root_path: Path, format_config: SourceFormat | None = None) -> SourceSnapshot:
    """Load every requirement file under root_path (one requirement per file)."""
    fmt = format_config or SourceFormat()
    root = Path(root_path)
    if not root.is_dir():
        raise TransportError(f"requirement directory {root} does not exist")
    requirements: list[Requirement] = []
    for path in sorted(root.rglob(fmt.glob)):
        if not path.is_file():
            continue
        fields, positions = _parse_front_matter(path)
        requirements.append(_requirement_from_fields(fields, positions, path, fmt.vocabulary))
    return _finish_snapshot(requirements, str(root))


def _payload_requirement(item: object, path: str, vocabulary: tuple[str, ...]) -> Requirement:
    if not isinstance(item, dict):
        raise SchemaError(f"{path}: expected an object")
    fields: dict[str, str] = {}
    for key in _REQUIRED_KEYS:
        if key not in item:
            raise SchemaError(f"{path}.{key}: missing required field")
        value = item[key]
        if not isinstance(value, str) or not value:
            raise SchemaError(f"{path}.{key}: expected a non-empty string")
        fields[key] = value
    scope = item.get("scope")
    if scope is not None and not isinstance(scope, str):
        raise SchemaError(f"{path}.scope: expected a string")
    title = collapse_whitespace(fields["title"])
    if not title:
        raise ValidationError(f"{path}.title: title is empty after trimming")
    if fields["status"] not in vocabulary:
        raise ValidationError(
            f"{path}.status: unknown status {fields['status']!r}; "
            f"vocabulary is {', '.join(vocabulary)}"
        )
    try:
        last_modified = parse_timestamp(fields["last_modified"])
    except ValueError:
        raise SchemaError(
            f"{path}.last_modified: {fields['last_modified']!r} is not a valid timestamp"
        ) from None
    return Requirement(
        id=fields["id"],
        title=title,
        status=fields["status"],
        last_modified=last_modified,
        category=fields["category"],
        scope=scope or None,
        location=path,
    )


def load_from_mock_alm(
    endpoint: str,
    auth_token: str | None = None,
    format_config: SourceFormat | None = None,
) -> SourceSnapshot:
    """Load the mock-ALM JSON payload from an HTTP endpoint or a local file."""
    fmt = format_config or SourceFormat()
    if endpoint.startswith(("http://", "https://")):
        headers = {}
        if auth_token:
            headers["Authorization"] = f"Bearer {auth_token}"
        try:
            response = requests.get(endpoint, headers=headers, timeout=30)
        except requests.RequestException as exc:
            raise TransportError(f"cannot reach mock-ALM endpoint {endpoint}: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(
                f"mock-ALM endpoint {endpoint} answered HTTP {response.status_code}"
            )
        text = response.text
    else:
        path = Path(endpoint)
        if not path.is_file():
            raise TransportError(f"mock-ALM payload file {endpoint} does not exist")
        text = path.read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"$: payload is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("$: expected a JSON object")
    if "requirements" not in payload:
        raise SchemaError("$.requirements: missing required field")
    items = payload["requirements"]
    if not isinstance(items, list):
        raise SchemaError("$.requirements: expected an array")
    requirements = [
        _payload_requirement(item, f"$.requirements[{index}]", fmt.vocabulary)
        for index, item in enumerate(items)
    ]
    return _finish_snapshot(requirements, endpoint)


@dataclass(frozen=True)
class PartitionRule:
    """Maps requirements to a RequirementSet by category (and optionally source)."""

    set_name: str
    category_pattern: str
    source_pattern: str | None = None

    def matches(self, requirement: Requirement, source_id: str) -> bool:
        if not fnmatch(requirement.category, self.category_pattern):
            return False
        if self.source_pattern is not None and not fnmatch(source_id, self.source_pattern):
            return False
        return True


def partition(
    snapshot: SourceSnapshot, rules: list[PartitionRule]
) -> list[tuple[str, list[Requirement]]]:
    """Split the snapshot into RequirementSets; every requirement must land in
    exactly one set or the whole operation fails."""
    unmatched: list[str] = []
    ambiguous: list[str] = []
    buckets: dict[str, list[Requirement]] = {}
    for req in snapshot.requirements:
        hits = [rule for rule in rules if rule.matches(req, snapshot.source_id)]
        target_sets = sorted({rule.set_name for rule in hits})
        if not target_sets:
            unmatched.append(req.id)
        elif len(target_sets) > 1:
            ambiguous.append(f"{req.id} (matches {', '.join(target_sets)})")
        else:
            buckets.setdefault(target_sets[0], []).append(req)
    if unmatched:
        raise PartitionError(f"requirements match no partition rule: {', '.join(unmatched)}")
    if ambiguous:
        raise PartitionError(f"requirements match several partition rules: {'; '.join(ambiguous)}")
    return [
        (set_name, sorted(buckets[set_name], key=lambda r: r.id))
        for set_name in sorted(buckets)
    ]
