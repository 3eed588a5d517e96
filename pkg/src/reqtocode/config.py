"""Single configuration file, INI-style sections, loaded from the repo root.

    [source]            kind = files | mock-alm, path, glob
    [statuses]          status token = lifecycle intent (active/deprecated/removed)
    [lifecycle]         grace_cycles, lifecycle_info_available
    [generation]        profile, artifact_root, max_name_length, profile_dirs
    [set <name>]        one per RequirementSet: category pattern, optional source pattern
    [scan]              include, exclude, test_globs, threads, trace_calls, verify_calls
    [report]            baseline
    [drift]             tolerance_seconds

Multi-value keys are whitespace-separated. Paths are relative to the config
file's directory, which is taken as the repository root.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .lifecycle import DEFAULT_STATUS_MAP, INTENT_ACTIVE, INTENT_DEPRECATED, INTENT_REMOVED, LifecycleConfig
from .scanner import DEFAULT_TEST_GLOBS, MarkerGrammar, ScanConfig
from .sources import PartitionRule

SOURCE_FILES = "files"
SOURCE_MOCK_ALM = "mock-alm"

_KNOWN_SECTIONS = {"source", "statuses", "lifecycle", "generation", "scan", "report", "drift"}
_SECTION_KEYS = {
    "source": {"kind", "path", "glob"},
    "lifecycle": {"grace_cycles", "lifecycle_info_available"},
    "generation": {"profile", "artifact_root", "max_name_length", "profile_dirs"},
    "scan": {"include", "exclude", "test_globs", "threads", "trace_calls", "verify_calls"},
    "report": {"baseline"},
    "drift": {"tolerance_seconds"},
}


@dataclass(frozen=True)
class ToolConfig:
    repo_root: Path
    source_kind: str
    source_path: str
    source_glob: str
    vocabulary: tuple[str, ...]
    lifecycle: LifecycleConfig
    profile_id: str
    profile_dirs: tuple[Path, ...]
    artifact_root: str
    max_name_length: int
    rules: tuple[PartitionRule, ...]
    include: tuple[str, ...]
    exclude: tuple[str, ...]
    test_globs: tuple[str, ...]
    threads: int
    trace_calls: tuple[str, ...]
    verify_calls: tuple[str, ...]
    baseline: str
    drift_tolerance_seconds: int = 0

    def scan_config(self) -> ScanConfig:
        exclude = list(self.exclude)
        if self.source_kind == SOURCE_FILES:
            source_root = self.source_path.strip("/")
            exclude.append(f"{source_root}/**")
        return ScanConfig(
            include=self.include,
            exclude=tuple(exclude),
            artifact_root=self.artifact_root,
            threads=self.threads or None,
        )

    def grammar(self, known_slugs: frozenset[str] = frozenset()) -> MarkerGrammar:
        return MarkerGrammar(
            trace_call_names=self.trace_calls,
            verify_call_names=self.verify_calls,
            test_globs=self.test_globs,
            bare_known_slugs=known_slugs,
        )


def _split(value: str) -> tuple[str, ...]:
    return tuple(value.split())


def _get_int(section: configparser.SectionProxy, key: str, default: int) -> int:
    raw = section.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ConfigError(f"[{section.name}] {key} must be non-negative")
    return value


def _get_bool(section: configparser.SectionProxy, key: str, default: bool) -> bool:
    raw = section.get(key)
    if raw is None:
        return default
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section.name}] {key} must be a boolean, got {raw!r}")


def _check_keys(parser: configparser.ConfigParser, section: str) -> None:
    allowed = _SECTION_KEYS.get(section)
    if allowed is None or section not in parser:
        return
    unknown = sorted(set(parser[section]) - allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")


def load_config(path: Path) -> ToolConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"configuration file {config_path} does not exist")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # status tokens and glob patterns are case-sensitive
    try:
        parser.read_string(config_path.read_text(encoding="utf-8"), source=str(config_path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {config_path}: {exc}") from exc

    rules: list[PartitionRule] = []
    for section in parser.sections():
        if section.startswith("set "):
            set_name = section[4:].strip()
            if not set_name:
                raise ConfigError("[set ] section needs a set name")
            keys = set(parser[section])
            unknown = sorted(keys - {"category", "source"})
            if unknown:
                raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")
            category = parser[section].get("category")
            if not category:
                raise ConfigError(f"[{section}] needs a category pattern")
            rules.append(
                PartitionRule(
                    set_name=set_name,
                    category_pattern=category,
                    source_pattern=parser[section].get("source") or None,
                )
            )
        elif section not in _KNOWN_SECTIONS:
            raise ConfigError(f"unknown configuration section [{section}]")
    if not rules:
        raise ConfigError("at least one [set <name>] partition rule is required")
    for section in _SECTION_KEYS:
        _check_keys(parser, section)

    if "source" not in parser:
        raise ConfigError("missing [source] section")
    source = parser["source"]
    kind = source.get("kind", "")
    if kind not in (SOURCE_FILES, SOURCE_MOCK_ALM):
        raise ConfigError(f"[source] kind must be {SOURCE_FILES} or {SOURCE_MOCK_ALM}, got {kind!r}")
    source_path = source.get("path", "")
    if not source_path:
        raise ConfigError("[source] path is required")

    if "statuses" in parser and len(parser["statuses"]) > 0:
        status_map: dict[str, str] = {}
        for token, intent in parser["statuses"].items():
            if intent not in (INTENT_ACTIVE, INTENT_DEPRECATED, INTENT_REMOVED):
                raise ConfigError(
                    f"[statuses] {token} maps to unknown intent {intent!r}; "
                    "use active, deprecated or removed"
                )
            status_map[token] = intent
    else:
        status_map = dict(DEFAULT_STATUS_MAP)

    lifecycle_section = parser["lifecycle"] if "lifecycle" in parser else None
    grace = _get_int(lifecycle_section, "grace_cycles", 2) if lifecycle_section else 2
    info_available = (
        _get_bool(lifecycle_section, "lifecycle_info_available", True) if lifecycle_section else True
    )

    generation = parser["generation"] if "generation" in parser else None
    artifact_root = generation.get("artifact_root", "traceables") if generation else "traceables"
    if Path(artifact_root).is_absolute() or artifact_root.startswith(".."):
        raise ConfigError("[generation] artifact_root must be a relative path inside the repo")
    profile_dirs_raw = _split(generation.get("profile_dirs", "")) if generation else ()
    repo_root = config_path.resolve().parent

    scan = parser["scan"] if "scan" in parser else None
    include = _split(scan.get("include", "")) if scan else ()
    exclude = _split(scan.get("exclude", "")) if scan else ()
    test_globs = _split(scan.get("test_globs", "")) if scan else ()
    trace_calls = _split(scan.get("trace_calls", "")) if scan else ()
    verify_calls = _split(scan.get("verify_calls", "")) if scan else ()

    return ToolConfig(
        repo_root=repo_root,
        source_kind=kind,
        source_path=source_path,
        source_glob=source.get("glob", "*.md"),
        vocabulary=tuple(status_map),
        lifecycle=LifecycleConfig(
            grace_cycles=grace,
            lifecycle_info_available=info_available,
            status_map=status_map,
        ),
        profile_id=generation.get("profile", "pseudo") if generation else "pseudo",
        profile_dirs=tuple(repo_root / p for p in profile_dirs_raw),
        artifact_root=artifact_root.strip("/"),
        max_name_length=_get_int(generation, "max_name_length", 80) if generation else 80,
        rules=tuple(rules),
        include=include or ("**/*",),
        exclude=exclude,
        test_globs=test_globs or DEFAULT_TEST_GLOBS,
        threads=_get_int(scan, "threads", 0) if scan else 0,
        trace_calls=trace_calls or ("trace",),
        verify_calls=verify_calls or ("verifiesRequirement",),
        baseline=parser["report"].get("baseline", "main") if "report" in parser else "main",
        drift_tolerance_seconds=_get_int(parser["drift"], "tolerance_seconds", 0)
        if "drift" in parser
        else 0,
    )
