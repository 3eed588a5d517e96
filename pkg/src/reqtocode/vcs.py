"""Read-only git adapter. Everything the rest of the tool knows about version
control goes through here: revision resolution, tree snapshots, last-commit
timestamps per path. The sentinel revision WORKTREE addresses the uncommitted
working tree for pre-flight checks."""

from __future__ import annotations

import io
import subprocess
import tarfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import VcsError

WORKTREE = "WORKTREE"


@dataclass(frozen=True)
class RevisionRef:
    name: str
    resolved_id: str

    @property
    def is_worktree(self) -> bool:
        return self.resolved_id == WORKTREE


class GitRepo:
    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise VcsError(f"{self.root} is not a directory")
        probe = subprocess.run(
            ["git", "-C", str(self.root), "rev-parse", "--git-dir"],
            capture_output=True,
            text=True,
        )
        if probe.returncode != 0:
            raise VcsError(f"{self.root} is not a git repository: {probe.stderr.strip()}")

    def _run(self, *args: str, binary: bool = False) -> bytes | str:
        result = subprocess.run(
            ["git", "-C", str(self.root), *args],
            capture_output=True,
        )
        if result.returncode != 0:
            detail = result.stderr.decode("utf-8", "replace").strip()
            raise VcsError(f"git {' '.join(args)} failed: {detail}")
        return result.stdout if binary else result.stdout.decode("utf-8")

    def resolve(self, name: str) -> RevisionRef:
        if name == WORKTREE:
            return RevisionRef(name=WORKTREE, resolved_id=WORKTREE)
        try:
            out = self._run("rev-parse", "--verify", "--quiet", f"{name}^{{commit}}")
        except VcsError:
            raise VcsError(f"revision {name!r} does not resolve to a commit") from None
        return RevisionRef(name=name, resolved_id=str(out).strip())

    def read_tree(self, rev: RevisionRef) -> dict[str, bytes]:
        """Snapshot of every file at the revision, path -> bytes."""
        if rev.is_worktree:
            tree: dict[str, bytes] = {}
            for path in self.root.rglob("*"):
                rel = path.relative_to(self.root).as_posix()
                if rel == ".git" or rel.startswith(".git/"):
                    continue
                if path.is_file():
                    tree[rel] = path.read_bytes()
            return tree
        raw = self._run("archive", "--format=tar", rev.resolved_id, binary=True)
        assert isinstance(raw, bytes)
        tree = {}
        with tarfile.open(fileobj=io.BytesIO(raw), mode="r:") as archive:
            for member in archive.getmembers():
                if not member.isfile():
                    continue
                extracted = archive.extractfile(member)
                if extracted is not None:
                    tree[member.name] = extracted.read()
        return tree

    def last_commit_time(self, rev: RevisionRef, path: str) -> datetime:
        """Committer timestamp of the newest commit at or before rev touching path."""
        anchor = "HEAD" if rev.is_worktree else rev.resolved_id
        if rev.is_worktree:
            if not (self.root / path).is_file():
                raise VcsError(f"path {path!r} does not exist in the working tree")
        else:
            probe = subprocess.run(
                ["git", "-C", str(self.root), "cat-file", "-e", f"{anchor}:{path}"],
                capture_output=True,
            )
            if probe.returncode != 0:
                raise VcsError(f"path {path!r} does not exist at revision {rev.name}")
        out = str(self._run("log", "-1", "--format=%ct", anchor, "--", path)).strip()
        if not out:
            raise VcsError(f"no commit touching {path!r} at or before {rev.name}")
        return datetime.fromtimestamp(int(out), tz=timezone.utc)

    def list_branches(self) -> list[RevisionRef]:
        out = str(self._run("for-each-ref", "refs/heads", "--format=%(refname:short) %(objectname)"))
        refs = []
        for line in out.splitlines():
            name, _, commit = line.partition(" ")
            if name:
                refs.append(RevisionRef(name=name, resolved_id=commit))
        return sorted(refs, key=lambda r: r.name)
