"""Graduated lifecycle: Active -> Deprecated -> Removed.

A deprecated requirement survives a configurable number of sync cycles before
its Traceable disappears, so referencing code gets warnings before build
failures. When the source cannot express lifecycle information at all, the
engine falls back to binary behaviour: present means Active, anything else
means Removed, with no Deprecated stage in between.

State transitions differ slightly between an explicit Deprecated status and a
requirement that simply vanished from the source:

  status Deprecated, grace g:   Dep(g) -> Dep(g-1) -> ... -> Dep(1) -> Removed
  vanished, grace g:            Dep(g) -> Dep(g-1) -> ... -> Dep(0) -> Removed

With an explicit status the source still vouches for the requirement, so the
countdown ends the moment it would pass zero; on absence the zero cycle is
kept as a last observable warning state before the record disappears.
Either way a requirement continuously deprecated by status is Removed exactly
at cycle g+1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, ResurrectionError

ACTIVE = "Active"
DEPRECATED = "Deprecated"
REMOVED = "Removed"

INTENT_ACTIVE = "active"
INTENT_DEPRECATED = "deprecated"
INTENT_REMOVED = "removed"

DEFAULT_STATUS_MAP: dict[str, str] = {
    "Draft": INTENT_ACTIVE,
    "Approved": INTENT_ACTIVE,
    "Deprecated": INTENT_DEPRECATED,
    "Removed": INTENT_REMOVED,
}


@dataclass(frozen=True)
class TraceableState:
    state: str
    # Timestamp of the deprecating change; present iff state is Deprecated.
    deprecated_since: str | None = None
    # Sync cycles left before removal; present iff state is Deprecated.
    grace_remaining: int | None = None

    def __post_init__(self) -> None:
        if self.state == DEPRECATED:
            if self.grace_remaining is None or self.grace_remaining < 0:
                raise ValueError("Deprecated state needs a non-negative grace_remaining")
        else:
            if self.deprecated_since is not None or self.grace_remaining is not None:
                raise ValueError(f"{self.state} state must not carry deprecation fields")


STATE_ACTIVE = TraceableState(ACTIVE)
STATE_REMOVED = TraceableState(REMOVED)


@dataclass(frozen=True)
class LifecycleConfig:
    grace_cycles: int = 2
    lifecycle_info_available: bool = True
    status_map: dict[str, str] | None = None

    def intent_of(self, status: str) -> str:
        mapping = self.status_map if self.status_map is not None else DEFAULT_STATUS_MAP
        try:
            intent = mapping[status]
        except KeyError:
            raise ConfigError(f"status {status!r} has no lifecycle intent configured") from None
        if intent not in (INTENT_ACTIVE, INTENT_DEPRECATED, INTENT_REMOVED):
            raise ConfigError(f"status {status!r} maps to unknown intent {intent!r}")
        return intent


def _enter_deprecation(config: LifecycleConfig, since: str | None) -> TraceableState:
    if config.grace_cycles == 0:
        return STATE_REMOVED
    return TraceableState(DEPRECATED, deprecated_since=since, grace_remaining=config.grace_cycles)


def derive_state(
    source_status: str,
    previous: TraceableState | None,
    config: LifecycleConfig,
    *,
    entered_at: str | None = None,
) -> TraceableState:
    """Advance one sync cycle for a requirement present in the snapshot.

    entered_at stamps deprecated_since when deprecation is entered this cycle;
    an existing deprecation keeps its original stamp.
    """
    intent = config.intent_of(source_status)
    if previous is not None and previous.state == REMOVED:
        if intent == INTENT_ACTIVE:
            raise ResurrectionError(
                "removed requirement reappeared with active intent; "
                "re-created requirements need a new id"
            )
        return STATE_REMOVED
    if not config.lifecycle_info_available:
        return STATE_ACTIVE if intent == INTENT_ACTIVE else STATE_REMOVED
    if intent == INTENT_ACTIVE:
        return STATE_ACTIVE
    if intent == INTENT_REMOVED:
        return STATE_REMOVED
    if previous is None or previous.state != DEPRECATED:
        return _enter_deprecation(config, entered_at)
    assert previous.grace_remaining is not None
    candidate = previous.grace_remaining - 1
    if candidate <= 0:
        return STATE_REMOVED
    return TraceableState(
        DEPRECATED,
        deprecated_since=previous.deprecated_since,
        grace_remaining=candidate,
    )


def absent_requirement_state(
    previous: TraceableState | None,
    config: LifecycleConfig,
    *,
    entered_at: str | None = None,
) -> TraceableState:
    """Advance one sync cycle for an id known before but absent from the snapshot.

    Callers must not invoke this for ids that were never seen.
    """
    if previous is None:
        raise ValueError("absent_requirement_state needs the previous state")
    if previous.state == REMOVED:
        return STATE_REMOVED
    if not config.lifecycle_info_available:
        return STATE_REMOVED
    if previous.state != DEPRECATED:
        return _enter_deprecation(config, entered_at)
    assert previous.grace_remaining is not None
    if previous.grace_remaining == 0:
        return STATE_REMOVED
    return TraceableState(
        DEPRECATED,
        deprecated_since=previous.deprecated_since,
        grace_remaining=previous.grace_remaining - 1,
    )
