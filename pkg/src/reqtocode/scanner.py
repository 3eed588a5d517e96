"""Lexical scan of a source tree for Traceable references.

The scanner never parses target languages. It strips comments and string
literals while preserving line structure, then matches the fixed marker forms:

    trace(SWR_101)                          trace-call
    verifiesRequirement(SWR_101)            verify-call
    @TracesSWR({SWR_101_..., SWR_102_...})  implementation-marker
    @VerifiesSWR(SWR_101_...)               test-marker
    TRACES_SWR(SWR_101_...)                 implementation-marker (macro form)
    VERIFIES_SWR(SWR_101_...)               test-marker (macro form)

Identifiers of constant shape outside any marker ("bare" mentions) count as
implementation references, but only when their leading segment matches a
requirement-id slug the state file knows about; that keeps ordinary constants
like RANGE_MAX out of the index while references to removed requirements still
surface as unresolved.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fnmatch import fnmatch
from pathlib import Path
from typing import Iterable, Mapping

from .codegen import Traceable, slugify
from .lifecycle import DEPRECATED

log = logging.getLogger("reqtocode")

MARKER_TRACE_CALL = "trace-call"
MARKER_VERIFY_CALL = "verify-call"
MARKER_IMPL = "implementation-marker"
MARKER_TEST = "test-marker"
MARKER_BARE = "bare"

KIND_IMPLEMENTATION = "implementation"
KIND_TEST = "test"

DEFAULT_TEST_GLOBS: tuple[str, ...] = ("**/test/**", "**/tests/**", "*_test.*")

# Leading alpha segment, one numeric segment, optional tail: SWR_101, SWR_101_VALIDATE...
_CONSTANT_TOKEN_RE = re.compile(r"\b[A-Z][A-Z0-9]*_[0-9]+(?:_[A-Z0-9]+)*\b")


def match_path(path: str, pattern: str) -> bool:
    """fnmatch-style matching; * crosses directory separators, patterns
    without a slash apply to the basename."""
    if "/" in pattern:
        return fnmatch(path, pattern) or fnmatch("./" + path, pattern)
    return fnmatch(path.rsplit("/", 1)[-1], pattern)


@dataclass(frozen=True)
class TraceReference:
    file: str
    line: int
    constant_name: str
    marker: str
    kind: str

    def sort_key(self) -> tuple[str, int, str, str, str]:
        return (self.file, self.line, self.constant_name, self.marker, self.kind)

    def serialize(self) -> str:
        return f"{self.file}:{self.line}:{self.kind}:{self.marker}:{self.constant_name}"


@dataclass(frozen=True)
class MarkerGrammar:
    """Scanning ruleset: marker forms, lexical syntax and test classification."""

    trace_call_names: tuple[str, ...] = ("trace",)
    verify_call_names: tuple[str, ...] = ("verifiesRequirement",)
    line_comments: tuple[str, ...] = ("//", "#")
    block_comments: tuple[tuple[str, str], ...] = (("/*", "*/"),)
    string_delimiters: tuple[str, ...] = ('"', "'")
    test_globs: tuple[str, ...] = DEFAULT_TEST_GLOBS
    # Requirement-id slugs the bare-mention pass may anchor on.
    bare_known_slugs: frozenset[str] = frozenset()

    def marker_pattern(self) -> re.Pattern[str]:
        def alternation(names: Iterable[str]) -> str:
            return "|".join(re.escape(n) for n in names)

        parts = [
            rf"(?P<trace>\b(?:{alternation(self.trace_call_names)})\s*\()",
            rf"(?P<verify>\b(?:{alternation(self.verify_call_names)})\s*\()",
            r"(?P<impl>(?:@Traces[A-Za-z0-9_]*|\bTRACES(?:_[A-Z0-9]+)+)\s*\()",
            r"(?P<test>(?:@Verifies[A-Za-z0-9_]*|\bVERIFIES(?:_[A-Z0-9]+)+)\s*\()",
        ]
        return re.compile("|".join(parts))


@dataclass(frozen=True)
class ReferenceIndex:
    references: tuple[TraceReference, ...]

    def serialize(self) -> str:
        return "".join(ref.serialize() + "\n" for ref in self.references)

    def triples(self) -> frozenset[tuple[str, str, str]]:
        return frozenset((r.file, r.constant_name, r.kind) for r in self.references)


@dataclass(frozen=True)
class ResolutionResult:
    resolved: tuple[tuple[TraceReference, Traceable], ...]
    deprecated_hits: tuple[tuple[TraceReference, Traceable], ...]
    unresolved: tuple[TraceReference, ...]


def strip_comments_and_strings(content: str, grammar: MarkerGrammar) -> str:
    """Blank out comments and string literals, keeping every newline and
    column position so line numbers survive."""
    out = list(content)
    i = 0
    n = len(content)

    def blank(start: int, end: int) -> None:
        for j in range(start, min(end, n)):
            if out[j] != "\n":
                out[j] = " "

    while i < n:
        ch = content[i]
        matched = False
        for token in grammar.line_comments:
            if content.startswith(token, i):
                end = content.find("\n", i)
                end = n if end == -1 else end
                blank(i, end)
                i = end
                matched = True
                break
        if matched:
            continue
        for opener, closer in grammar.block_comments:
            if content.startswith(opener, i):
                end = content.find(closer, i + len(opener))
                end = n if end == -1 else end + len(closer)
                blank(i, end)
                i = end
                matched = True
                break
        if matched:
            continue
        if ch in grammar.string_delimiters:
            j = i + 1
            while j < n:
                if content[j] == ch:
                    break
                if content[j] == "\n":
                    break  # unterminated on this line; strings do not span lines
                if content[j] == "\\":
                    j += 2
                    continue
                j += 1
            end = min(j + 1, n)
            blank(i, end)
            i = end
            continue
        i += 1
    return "".join(out)


def _balanced_args(text: str, open_paren: int) -> tuple[str, int] | None:
    """Return (argument text, end index) for the parenthesized group starting
    at open_paren, or None when the group never closes (malformed marker)."""
    depth = 0
    for i in range(open_paren, len(text)):
        ch = text[i]
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
            if depth == 0:
                return text[open_paren + 1 : i], i + 1
    return None


def _is_test_path(path: str, grammar: MarkerGrammar) -> bool:
    return any(match_path(path, glob) for glob in grammar.test_globs)


def _known_bare_token(token: str, slugs: frozenset[str]) -> bool:
    for slug in slugs:
        if token == slug or token.startswith(slug + "_"):
            return True
    return False


def scan_file(path: str, content: str, grammar: MarkerGrammar) -> list[TraceReference]:
    """Scan one file; references come back in order of appearance."""
    stripped = strip_comments_and_strings(content, grammar)
    test_path = _is_test_path(path, grammar)
    found: dict[tuple[int, str, str], int] = {}
    consumed: list[tuple[int, int]] = []

    def add(position: int, line: int, token: str, marker: str) -> None:
        kind = KIND_TEST if test_path or marker in (MARKER_VERIFY_CALL, MARKER_TEST) else KIND_IMPLEMENTATION
        key = (line, token, marker)
        if key not in found:
            found[key] = position
            kinds[key] = kind

    kinds: dict[tuple[int, str, str], str] = {}
    for match in grammar.marker_pattern().finditer(stripped):
        group = match.lastgroup
        marker = {
            "trace": MARKER_TRACE_CALL,
            "verify": MARKER_VERIFY_CALL,
            "impl": MARKER_IMPL,
            "test": MARKER_TEST,
        }[group or ""]
        open_paren = match.end() - 1
        parsed = _balanced_args(stripped, open_paren)
        if parsed is None:
            continue
        args, end = parsed
        consumed.append((match.start(), end))
        line = stripped.count("\n", 0, match.start()) + 1
        for token_match in _CONSTANT_TOKEN_RE.finditer(args):
            add(match.start(), line, token_match.group(0), marker)

    if grammar.bare_known_slugs:
        for token_match in _CONSTANT_TOKEN_RE.finditer(stripped):
            start = token_match.start()
            if any(lo <= start < hi for lo, hi in consumed):
                continue
            token = token_match.group(0)
            if not _known_bare_token(token, grammar.bare_known_slugs):
                continue
            line = stripped.count("\n", 0, start) + 1
            add(start, line, token, MARKER_BARE)

    ordered = sorted(found.items(), key=lambda item: (item[1], item[0]))
    return [
        TraceReference(file=path, line=line, constant_name=token, marker=marker, kind=kinds[(line, token, marker)])
        for (line, token, marker), _pos in ordered
    ]


@dataclass(frozen=True)
class ScanConfig:
    include: tuple[str, ...] = ("**/*",)
    exclude: tuple[str, ...] = ()
    artifact_root: str | None = None
    threads: int | None = None


def _selected_files(paths: Iterable[str], config: ScanConfig) -> list[str]:
    selected = []
    root = (config.artifact_root or "").strip("/")
    for path in paths:
        if root and (path == root or path.startswith(root + "/")):
            continue
        if path == ".git" or path.startswith(".git/") or "/.git/" in path:
            continue
        if not any(match_path(path, glob) for glob in config.include):
            continue
        if any(match_path(path, glob) for glob in config.exclude):
            continue
        selected.append(path)
    return sorted(selected)


def _looks_binary(data: bytes) -> bool:
    return b"\x00" in data[:8192]


def scan_tree(
    tree: Mapping[str, bytes] | Path,
    config: ScanConfig,
    grammar: MarkerGrammar,
    threads: int | None = None,
) -> ReferenceIndex:
    """Scan a directory or an in-memory tree; output ordering is independent
    of traversal order and worker count."""
    if isinstance(tree, Path):
        files: dict[str, Path | bytes] = {
            p.relative_to(tree).as_posix(): p for p in tree.rglob("*") if p.is_file()
        }
    else:
        files = dict(tree)
    paths = _selected_files(files.keys(), config)

    def scan_one(path: str) -> list[TraceReference]:
        source = files[path]
        try:
            data = source.read_bytes() if isinstance(source, Path) else source
        except OSError as exc:
            log.warning("cannot read %s: %s", path, exc)
            return []
        if _looks_binary(data):
            return []
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            return []
        return scan_file(path, text, grammar)

    worker_count = threads if threads is not None else (config.threads or 0)
    if worker_count and worker_count > 1:
        with ThreadPoolExecutor(max_workers=worker_count) as pool:
            per_file = list(pool.map(scan_one, paths))
    else:
        per_file = [scan_one(path) for path in paths]
    references = [ref for refs in per_file for ref in refs]
    references.sort(key=TraceReference.sort_key)
    return ReferenceIndex(references=tuple(references))


def resolve(index: ReferenceIndex, traceables: list[Traceable]) -> ResolutionResult:
    """Match references against the current Traceable set. A reference may use
    the full constant name or the requirement-id slug; slugs shared by several
    requirements resolve nothing (the full name still does)."""
    lookup: dict[str, Traceable] = {}
    slug_owners: dict[str, list[Traceable]] = {}
    for t in traceables:
        lookup[t.constant_name] = t
        slug_owners.setdefault(slugify(t.requirement_id), []).append(t)
    for slug, owners in slug_owners.items():
        if len(owners) == 1 and slug not in lookup:
            lookup[slug] = owners[0]

    resolved: list[tuple[TraceReference, Traceable]] = []
    deprecated_hits: list[tuple[TraceReference, Traceable]] = []
    unresolved: list[TraceReference] = []
    for ref in index.references:
        target = lookup.get(ref.constant_name)
        if target is None:
            unresolved.append(ref)
            continue
        resolved.append((ref, target))
        if target.state.state == DEPRECATED:
            deprecated_hits.append((ref, target))
    return ResolutionResult(
        resolved=tuple(resolved),
        deprecated_hits=tuple(deprecated_hits),
        unresolved=tuple(unresolved),
    )
