"""Command-line entry points.

Exit codes are a contract: 0 means clean, 1 means a traceability finding under
the active strictness flags, 2 means an operational problem (configuration,
source, repository). Diagnostics print one per line as

    LEVEL file:line constant_name message
"""

from __future__ import annotations

import functools
import logging
import os
from datetime import timedelta
from pathlib import Path

import click
import requests

from .config import ToolConfig, load_config
from .coverage import compute_coverage, compute_delta, implementation_coverage, render
from .drift import detect_drift, format_finding
from .errors import ConfigError, ReqtocodeError, TransportError
from .figures import render_figures
from .pipeline import ALM_TOKEN_ENV, RevisionContext, revision_context, run_sync
from .scanner import scan_tree
from .vcs import WORKTREE, GitRepo


def _guard(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ReqtocodeError as exc:
            click.echo(f"reqtocode: error: {exc}", err=True)
            raise SystemExit(2) from exc

    return wrapper


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path),
    default=Path("reqtocode.ini"),
    show_default=True,
    help="Configuration file; its directory is the repository root.",
)
@click.pass_context
def main(ctx: click.Context, config_path: Path) -> None:
    """Requirements-to-code traceability compiler."""
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    ctx.obj = config_path


def _cfg(ctx: click.Context) -> ToolConfig:
    return load_config(ctx.obj)


def _context_at(cfg: ToolConfig, revision: str) -> tuple[GitRepo, RevisionContext]:
    repo = GitRepo(cfg.repo_root)
    rev = repo.resolve(revision)
    return repo, revision_context(cfg, repo, rev)


@main.command()
@click.pass_context
@_guard
def sync(ctx: click.Context) -> None:
    """Load requirements, advance the lifecycle one cycle, regenerate artifacts."""
    cfg = _cfg(ctx)
    result = run_sync(cfg)
    click.echo(
        f"sync: {len(result.snapshot.requirements)} requirement(s) from {result.snapshot.source_id}"
    )
    click.echo(f"sync: snapshot sha256:{result.snapshot.content_hash()}")
    for line in result.transitions:
        click.echo(f"sync: {line}")
    plan = result.plan
    unchanged = len(plan.contents) - len(plan.creates) - len(plan.overwrites)
    click.echo(
        f"sync: {len(plan.creates)} created, {len(plan.overwrites)} overwritten, "
        f"{len(plan.deletions)} deleted, {unchanged} unchanged"
    )


@main.command()
@click.option("--revision", default=WORKTREE, show_default=True, help="Commit-ish or WORKTREE.")
@click.option("--deny-deprecated", is_flag=True, help="Deprecated references fail the gate.")
@click.pass_context
@_guard
def verify(ctx: click.Context, revision: str, deny_deprecated: bool) -> None:
    """Scan and resolve references; unresolved ones fail the build."""
    cfg = _cfg(ctx)
    _repo, rc = _context_at(cfg, revision)
    lines: list[tuple[tuple, str]] = []
    for ref in rc.resolution.unresolved:
        lines.append(
            (
                ref.sort_key(),
                f"ERROR {ref.file}:{ref.line} {ref.constant_name} "
                f"unresolved reference: no Traceable with this name at {rc.rev.name}",
            )
        )
    for ref, target in rc.resolution.deprecated_hits:
        grace = target.state.grace_remaining
        lines.append(
            (
                ref.sort_key(),
                f"WARN {ref.file}:{ref.line} {ref.constant_name} "
                f"reference to Deprecated Traceable {target.constant_name} "
                f"(grace {grace} cycle(s) remaining)",
            )
        )
    for _key, line in sorted(lines):
        click.echo(line)
    if rc.resolution.unresolved or (deny_deprecated and rc.resolution.deprecated_hits):
        raise SystemExit(1)


@main.command()
@click.option("--revision", default=WORKTREE, show_default=True, help="Commit-ish or WORKTREE.")
@click.option("--baseline", default=None, help="Baseline revision: report the delta instead.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table", show_default=True)
@click.option("--set", "set_filter", default=None, help="Restrict to one RequirementSet.")
@click.option("--min-coverage", type=float, default=None, help="Fail below this implementation-coverage fraction.")
@click.option("--no-drift", is_flag=True, help="Skip the drift section.")
@click.option("--figures", "figures_dir", type=click.Path(path_type=Path), default=None, help="Render charts into this directory.")
@click.option("--post", "post_url", default=None, help="POST the JSON report to this endpoint.")
@click.pass_context
@_guard
def report(
    ctx: click.Context,
    revision: str,
    baseline: str | None,
    fmt: str,
    set_filter: str | None,
    min_coverage: float | None,
    no_drift: bool,
    figures_dir: Path | None,
    post_url: str | None,
) -> None:
    """Coverage report, or the reference delta against a baseline revision."""
    cfg = _cfg(ctx)
    repo, rc = _context_at(cfg, revision)
    if baseline is not None:
        base_rev = repo.resolve(baseline)
        base_tree = repo.read_tree(base_rev)
        # Same grammar as the branch scan so the two indices are comparable.
        base_index = scan_tree(base_tree, cfg.scan_config(), cfg.grammar(rc.slugs))
        rep = compute_delta(rc.index, base_index, rc.traceables, rc.rev, base_rev)
        if min_coverage is not None:
            raise ConfigError("--min-coverage applies to coverage reports, not deltas")
    else:
        rep = compute_coverage(rc.traceables, rc.resolution, rc.rev, set_filter)
    findings = None
    if not no_drift:
        tolerance = timedelta(seconds=cfg.drift_tolerance_seconds)
        findings = detect_drift(rc.traceables, rc.resolution, rc.rev, repo, tolerance)
    click.echo(render(rep, fmt, drift=findings), nl=False)
    if figures_dir is not None:
        for path in render_figures(rep, figures_dir):
            click.echo(f"figure: {path}", err=True)
    if post_url is not None:
        _post_report(render(rep, "json", drift=findings), post_url)
    if min_coverage is not None:
        covered, total = implementation_coverage(rep)
        fraction = covered / total if total else 1.0
        click.echo(f"implementation coverage: {covered}/{total}", err=True)
        if fraction < min_coverage:
            raise SystemExit(1)


def _post_report(json_text: str, url: str) -> None:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(ALM_TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    try:
        response = requests.post(url, data=json_text.encode("utf-8"), headers=headers, timeout=30)
    except requests.RequestException as exc:
        raise TransportError(f"cannot POST report to {url}: {exc}") from exc
    if response.status_code >= 300:
        raise TransportError(f"report endpoint {url} answered HTTP {response.status_code}")
    click.echo(f"report posted to {url} (HTTP {response.status_code})", err=True)


@main.command()
@click.option("--revision", default=WORKTREE, show_default=True, help="Commit-ish or WORKTREE.")
@click.option("--strict-drift", is_flag=True, help="Exit 1 when any drift finding exists.")
@click.pass_context
@_guard
def drift(ctx: click.Context, revision: str, strict_drift: bool) -> None:
    """Compare requirement modification times against code commit times."""
    cfg = _cfg(ctx)
    repo, rc = _context_at(cfg, revision)
    tolerance = timedelta(seconds=cfg.drift_tolerance_seconds)
    findings = detect_drift(rc.traceables, rc.resolution, rc.rev, repo, tolerance)
    for finding in findings:
        click.echo(format_finding(finding))
    if not findings:
        click.echo("no drift findings")
    if strict_drift and findings:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
