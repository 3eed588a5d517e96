"""Shared fixtures: scripted git repositories with pinned commit dates.

The repositories reproduce a small sensor-validation project whose history
walks through generation, deprecation, removal and a feature branch, so the
reports and gates have known expected values at every revision.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from pathlib import Path

import pytest
from click.testing import CliRunner

from reqtocode.cli import main as cli_main


def req_md(
    req_id: str,
    title: str,
    status: str,
    last_modified: str,
    category: str = "SWR",
    scope: str | None = None,
    body: str = "",
) -> str:
    lines = [
        "---",
        f"id: {req_id}",
        f"title: {title}",
        f"status: {status}",
        f"last_modified: {last_modified}",
        f"category: {category}",
    ]
    if scope:
        lines.append(f"scope: {scope}")
    lines.append("---")
    lines.append(body or f"Requirement body for {req_id}.")
    return "\n".join(lines) + "\n"


BASE_CONFIG = """\
[source]
kind = files
path = requirements

[lifecycle]
grace_cycles = 2

[generation]
profile = pseudo
artifact_root = traceables

[set SensorValidation_SWR]
category = SWR
"""


@dataclass
class CliResult:
    exit_code: int
    stdout: str
    stderr: str

    def lines(self, prefix: str) -> list[str]:
        return [line for line in self.stdout.splitlines() if line.startswith(prefix)]


class RepoBuilder:
    """Scripted git repository with deterministic committer/author dates."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._git("init", "-q", "-b", "main")
        self._git("config", "user.email", "fixture@example.com")
        self._git("config", "user.name", "Fixture")

    def _git(self, *args: str, date: str | None = None) -> str:
        env = None
        if date is not None:
            import os

            env = dict(os.environ)
            env["GIT_AUTHOR_DATE"] = date
            env["GIT_COMMITTER_DATE"] = date
        result = subprocess.run(
            ["git", "-C", str(self.root), *args],
            capture_output=True,
            text=True,
            env=env,
        )
        assert result.returncode == 0, f"git {' '.join(args)}: {result.stderr}"
        return result.stdout

    def write(self, rel: str, content: str) -> None:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")

    def remove(self, rel: str) -> None:
        (self.root / rel).unlink()

    def commit(self, message: str, date: str) -> str:
        self._git("add", "-A")
        self._git("commit", "-q", "-m", message, date=date)
        return self._git("rev-parse", "HEAD").strip()

    def branch(self, name: str) -> None:
        self._git("branch", name)

    def checkout(self, name: str) -> None:
        self._git("checkout", "-q", name)

    def cli(self, *args: str) -> CliResult:
        runner = CliRunner()
        result = runner.invoke(
            cli_main,
            ["--config", str(self.root / "reqtocode.ini"), *args],
            catch_exceptions=False,
        )
        return CliResult(exit_code=result.exit_code, stdout=result.stdout, stderr=result.stderr)

    def sync(self) -> CliResult:
        result = self.cli("sync")
        assert result.exit_code == 0, result.stderr
        return result

    def artifact_bytes(self) -> dict[str, bytes]:
        base = self.root / "traceables"
        return {
            p.relative_to(base).as_posix(): p.read_bytes()
            for p in sorted(base.rglob("*"))
            if p.is_file()
        }


IMPL_VALIDATE = """\
int validate_sensor_input(int reading) {
    trace(SWR_101);  // range check, see also SWR_103 in the logging notes
    if (reading < RANGE_MIN || reading > RANGE_MAX) {
        log_failure(reading);
        return 0;
    }
    return 1;
}

int reject_stale(int age_ms) {
    trace(SWR_102);
    return age_ms > MAX_AGE_MS ? 0 : 1;
}
"""

IMPL_PIPELINE = """\
TRACES_SWR(SWR_101_VALIDATE_SENSOR_RANGE_ON_INPUT);
void pipeline_step(int reading) {
    if (!validate_sensor_input(reading)) {
        drop_sample();
    }
}
"""

TEST_VALIDATE = """\
void test_range_low(void) {
    verifiesRequirement(SWR_101);
    expect(validate_sensor_input(-40) == 0);
}

void test_range_high(void) {
    verifiesRequirement(SWR_101);
    expect(validate_sensor_input(4096) == 0);
}

VERIFIES_SWR(SWR_101_VALIDATE_SENSOR_RANGE_ON_INPUT);

void test_stale_rejected(void) {
    verifiesRequirement(SWR_102);
    expect(reject_stale(60000) == 0);
}
"""

IMPL_FUSION = """\
int fuse_readings(int a, int b) {
    trace(SWR_201);
    return (a + b) / 2;
}

int sensors_disagree(int a, int b) {
    trace(SWR_202);
    return delta(a, b) > FUSION_EPSILON;
}
"""

TEST_FUSION = """\
void test_fusion_mean(void) {
    verifiesRequirement(SWR_201);
    expect(fuse_readings(10, 20) == 15);
}

void test_fusion_commutes(void) {
    verifiesRequirement(SWR_201);
    expect(fuse_readings(3, 5) == fuse_readings(5, 3));
}

void test_disagreement_flagged(void) {
    verifiesRequirement(SWR_202);
    expect(sensors_disagree(10, 900));
}
"""


@pytest.fixture(scope="session")
def sensor_repo(tmp_path_factory: pytest.TempPathFactory) -> RepoBuilder:
    """main: SWR-101 Active (2 impl / 3 test refs), SWR-102 Deprecated (1 / 1),
    SWR-103 Active (0 / 0). Branch feature/sensor-fusion adds SWR-201/202 with
    new code; branch removal removes SWR-102 while its references remain."""
    root = tmp_path_factory.mktemp("sensor-repo")
    repo = RepoBuilder(root)
    repo.write("reqtocode.ini", BASE_CONFIG)
    repo.write(
        "requirements/swr-101.md",
        req_md("SWR-101", "Validate sensor range on input", "Approved", "2026-01-20T09:00:00Z"),
    )
    repo.write(
        "requirements/swr-102.md",
        req_md("SWR-102", "Reject stale sensor readings", "Approved", "2026-01-20T09:05:00Z"),
    )
    repo.write(
        "requirements/swr-103.md",
        req_md("SWR-103", "Log validation failures", "Draft", "2026-01-20T09:10:00Z"),
    )
    repo.commit("add requirements and tool config", "2026-01-20T10:00:00Z")
    repo.sync()
    repo.commit("generate traceables", "2026-01-21T10:00:00Z")

    repo.write("src/validate.c", IMPL_VALIDATE)
    repo.write("src/pipeline.c", IMPL_PIPELINE)
    repo.write("tests/test_validate.c", TEST_VALIDATE)
    repo.commit("implement sensor validation with trace references", "2026-01-29T12:00:00Z")

    repo.write(
        "requirements/swr-102.md",
        req_md(
            "SWR-102",
            "Reject stale sensor readings",
            "Deprecated",
            "2026-02-18T14:32:00Z",
            body="Superseded by the fused-reading staleness policy.",
        ),
    )
    repo.sync()
    repo.commit("deprecate SWR-102", "2026-02-18T16:00:00Z")

    # Branch where SWR-102 is removed while its references are still in code.
    repo._git("checkout", "-q", "-b", "removal")
    repo.write(
        "requirements/swr-102.md",
        req_md("SWR-102", "Reject stale sensor readings", "Removed", "2026-02-19T09:00:00Z"),
    )
    repo.sync()
    repo.commit("remove SWR-102 from the requirement source", "2026-02-19T10:00:00Z")

    # Feature branch contributing two new requirements plus their code.
    repo._git("checkout", "-q", "main")
    repo._git("checkout", "-q", "-b", "feature/sensor-fusion")
    repo.write(
        "requirements/swr-201.md",
        req_md(
            "SWR-201",
            "Fuse readings from redundant sensors",
            "Approved",
            "2026-02-25T08:00:00Z",
            scope="sensor-fusion",
        ),
    )
    repo.write(
        "requirements/swr-202.md",
        req_md(
            "SWR-202",
            "Detect sensor disagreement",
            "Approved",
            "2026-02-25T08:05:00Z",
            scope="sensor-fusion",
        ),
    )
    repo.sync()
    repo.commit("add sensor fusion requirements", "2026-03-01T09:00:00Z")
    repo.write("src/fusion.c", IMPL_FUSION)
    repo.write("tests/test_fusion.c", TEST_FUSION)
    repo.commit("implement sensor fusion", "2026-03-02T09:00:00Z")

    repo._git("checkout", "-q", "main")
    return repo


@pytest.fixture(scope="session")
def drift_requirement_newer_repo(tmp_path_factory: pytest.TempPathFactory) -> RepoBuilder:
    """One referenced requirement edited on 2026-02-18T14:32:00Z after its code
    was last touched on 2026-01-29."""
    repo = RepoBuilder(tmp_path_factory.mktemp("drift-req-newer"))
    repo.write("reqtocode.ini", BASE_CONFIG)
    repo.write(
        "requirements/swr-101.md",
        req_md("SWR-101", "Validate sensor range on input", "Approved", "2026-01-10T00:00:00Z"),
    )
    repo.commit("add requirement", "2026-01-12T00:00:00Z")
    repo.sync()
    repo.commit("generate traceables", "2026-01-12T01:00:00Z")
    repo.write("src/validate.c", "int check(int r) {\n    trace(SWR_101);\n    return r > 0;\n}\n")
    repo.commit("implement range validation", "2026-01-29T00:00:00Z")
    repo.write(
        "requirements/swr-101.md",
        req_md(
            "SWR-101",
            "Validate sensor range on input",
            "Approved",
            "2026-02-18T14:32:00Z",
            body="Clarified the admissible range boundaries.",
        ),
    )
    repo.sync()
    repo.commit("refine requirement wording", "2026-02-18T15:00:00Z")
    return repo


@pytest.fixture(scope="session")
def drift_code_newer_repo(tmp_path_factory: pytest.TempPathFactory) -> RepoBuilder:
    """Code committed 2026-02-20 while the requirement was last modified
    2026-01-15."""
    repo = RepoBuilder(tmp_path_factory.mktemp("drift-code-newer"))
    repo.write("reqtocode.ini", BASE_CONFIG)
    repo.write(
        "requirements/swr-101.md",
        req_md("SWR-101", "Validate sensor range on input", "Approved", "2026-01-15T00:00:00Z"),
    )
    repo.commit("add requirement", "2026-01-16T00:00:00Z")
    repo.sync()
    repo.commit("generate traceables", "2026-01-16T01:00:00Z")
    repo.write("src/validate.c", "int check(int r) {\n    trace(SWR_101);\n    return r > 0;\n}\n")
    repo.commit("rework validation internals", "2026-02-20T00:00:00Z")
    return repo


@pytest.fixture()
def settled_repo(tmp_path: Path) -> RepoBuilder:
    """All-Active fixture whose lifecycle is settled, for idempotence and
    cross-branch byte-equality checks."""
    repo = RepoBuilder(tmp_path / "settled")
    repo.write("reqtocode.ini", BASE_CONFIG)
    repo.write(
        "requirements/swr-101.md",
        req_md("SWR-101", "Validate sensor range on input", "Approved", "2026-01-20T09:00:00Z"),
    )
    repo.write(
        "requirements/swr-102.md",
        req_md("SWR-102", "Reject stale sensor readings", "Approved", "2026-01-20T09:05:00Z"),
    )
    repo.write("src/validate.c", IMPL_VALIDATE)
    repo.commit("add requirements and code", "2026-01-20T10:00:00Z")
    repo.sync()
    repo.commit("generate traceables", "2026-01-21T10:00:00Z")
    return repo
