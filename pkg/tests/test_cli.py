"""End-to-end CLI behaviour on scripted repositories: exit codes, diagnostic
format, report output, figures, posting."""

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import jsonschema
import pytest

from conftest import req_md

DIAGNOSTIC_RE = re.compile(r"^(ERROR|WARN) \S+:\d+ \S+ .+$")
DRIFT_RE = re.compile(
    r"^DRIFT \S+ (RequirementNewer|CodeNewer) "
    r"requirement=\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z "
    r"code=\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z evidence=\S+$"
)
SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "report-schema.json").read_text())


class TestVerify:
    def test_deprecated_references_warn_but_pass(self, sensor_repo):
        result = sensor_repo.cli("verify", "--revision", "main")
        assert result.exit_code == 0
        warnings = result.lines("WARN")
        assert len(warnings) == 2
        assert result.lines("ERROR") == []
        for line in warnings:
            assert DIAGNOSTIC_RE.match(line)
            assert "SWR_102_REJECT_STALE_SENSOR_READINGS" in line
            assert "grace 2 cycle(s) remaining" in line

    def test_deny_deprecated_gate(self, sensor_repo):
        result = sensor_repo.cli("verify", "--revision", "main", "--deny-deprecated")
        assert result.exit_code == 1

    def test_removed_references_fail(self, sensor_repo):
        result = sensor_repo.cli("verify", "--revision", "removal")
        assert result.exit_code == 1
        errors = result.lines("ERROR")
        assert len(errors) == 2
        assert {e.split()[1] for e in errors} == {
            "src/validate.c:11",
            "tests/test_validate.c:14",
        }
        for line in errors:
            assert DIAGNOSTIC_RE.match(line)
            assert "unresolved reference: no Traceable with this name at removal" in line

    def test_feature_branch_passes(self, sensor_repo):
        result = sensor_repo.cli("verify", "--revision", "feature/sensor-fusion")
        assert result.exit_code == 0
        assert result.lines("ERROR") == []

    def test_revision_without_state_file(self, sensor_repo):
        # The first commit predates any sync.
        result = sensor_repo.cli("verify", "--revision", "main~3")
        assert result.exit_code == 2
        assert "run sync and commit first" in result.stderr

    def test_unknown_revision(self, sensor_repo):
        result = sensor_repo.cli("verify", "--revision", "no-such-branch")
        assert result.exit_code == 2
        assert "no-such-branch" in result.stderr


class TestReport:
    def test_table_cells(self, sensor_repo):
        result = sensor_repo.cli("report", "--revision", "main", "--no-drift")
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "Coverage report: main"
        rows = {l.split()[0]: l.split() for l in lines if l.startswith("SWR_")}
        assert rows["SWR_101"][1:] == ["2", "3", "Active"]
        assert rows["SWR_102"][1:] == ["1", "1", "Deprecated"]
        assert rows["SWR_103"][1:] == ["0", "0", "Active"]

    def test_json_is_schema_valid(self, sensor_repo):
        result = sensor_repo.cli("report", "--revision", "main", "--format", "json")
        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        jsonschema.Draft202012Validator(SCHEMA).validate(payload)
        assert payload["kind"] == "coverage"
        assert len(payload["drift"]) > 0  # drift on by default

    def test_set_filter(self, sensor_repo):
        result = sensor_repo.cli(
            "report", "--revision", "main", "--set", "SensorValidation_SWR", "--no-drift"
        )
        assert "(set SensorValidation_SWR)" in result.stdout.splitlines()[0]
        assert len([l for l in result.stdout.splitlines() if l.startswith("SWR_")]) == 3

    def test_delta_between_branches(self, sensor_repo):
        result = sensor_repo.cli(
            "report", "--revision", "feature/sensor-fusion", "--baseline", "main",
            "--no-drift",
        )
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "Delta report: feature/sensor-fusion vs baseline main"
        rows = {l.split()[0]: l.split() for l in lines if l.startswith("SWR_2")}
        assert rows["SWR_201"][1:] == ["1", "2", "Active"]
        assert rows["SWR_202"][1:] == ["1", "1", "Active"]
        # Pre-existing references contribute no rows.
        assert "SWR_101" not in result.stdout

    def test_min_coverage_gate(self, sensor_repo):
        passing = sensor_repo.cli(
            "report", "--revision", "main", "--min-coverage", "0.5", "--no-drift"
        )
        assert passing.exit_code == 0
        assert "implementation coverage: 2/3" in passing.stderr
        failing = sensor_repo.cli(
            "report", "--revision", "main", "--min-coverage", "0.9", "--no-drift"
        )
        assert failing.exit_code == 1

    def test_min_coverage_rejected_for_deltas(self, sensor_repo):
        result = sensor_repo.cli(
            "report", "--revision", "feature/sensor-fusion", "--baseline", "main",
            "--min-coverage", "0.5", "--no-drift",
        )
        assert result.exit_code == 2
        assert "min-coverage" in result.stderr

    def test_figures_written(self, sensor_repo, tmp_path):
        fig_dir = tmp_path / "charts"
        result = sensor_repo.cli(
            "report", "--revision", "main", "--no-drift", "--figures", str(fig_dir)
        )
        assert result.exit_code == 0
        for name in ("coverage.png", "lifecycle.png"):
            data = (fig_dir / name).read_bytes()
            assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(result.stderr.splitlines()) == 2

    def test_delta_figure(self, sensor_repo, tmp_path):
        fig_dir = tmp_path / "charts"
        result = sensor_repo.cli(
            "report", "--revision", "feature/sensor-fusion", "--baseline", "main",
            "--no-drift", "--figures", str(fig_dir),
        )
        assert result.exit_code == 0
        assert (fig_dir / "delta.png").is_file()
        assert not (fig_dir / "lifecycle.png").exists()

    def test_post_sends_json_with_auth(self, sensor_repo, monkeypatch):
        captured = {}

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers["Content-Length"])
                captured["body"] = self.rfile.read(length)
                captured["content_type"] = self.headers.get("Content-Type")
                captured["auth"] = self.headers.get("Authorization")
                self.send_response(204)
                self.end_headers()

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        monkeypatch.setenv("REQTOCODE_ALM_TOKEN", "hunter2")
        try:
            url = f"http://127.0.0.1:{server.server_port}/reports"
            result = sensor_repo.cli(
                "report", "--revision", "main", "--no-drift", "--post", url
            )
            assert result.exit_code == 0
            assert "report posted" in result.stderr
            payload = json.loads(captured["body"])
            jsonschema.Draft202012Validator(SCHEMA).validate(payload)
            assert captured["content_type"] == "application/json"
            assert captured["auth"] == "Bearer hunter2"
        finally:
            server.shutdown()

    def test_post_failure_is_operational_error(self, sensor_repo):
        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                self.send_response(500)
                self.end_headers()

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_port}/reports"
            result = sensor_repo.cli("report", "--revision", "main", "--no-drift", "--post", url)
            assert result.exit_code == 2
            assert "500" in result.stderr
        finally:
            server.shutdown()


class TestDrift:
    def test_both_directions_on_main(self, sensor_repo):
        result = sensor_repo.cli("drift", "--revision", "main")
        assert result.exit_code == 0  # findings are signals, not failures
        lines = result.stdout.splitlines()
        assert all(DRIFT_RE.match(l) for l in lines)
        directions = {l.split()[1]: l.split()[2] for l in lines}
        # SWR-101's code postdates its requirement; SWR-102 was edited after
        # its code last changed.
        assert directions == {"SWR-101": "CodeNewer", "SWR-102": "RequirementNewer"}

    def test_strict_drift_gates(self, sensor_repo):
        result = sensor_repo.cli("drift", "--revision", "main", "--strict-drift")
        assert result.exit_code == 1

    def test_tolerance_from_config(self, settled_repo):
        noisy = settled_repo.cli("drift", "--revision", "main")
        assert noisy.exit_code == 0
        assert all(l.split()[2] == "CodeNewer" for l in noisy.stdout.splitlines())
        config = settled_repo.root / "reqtocode.ini"
        config.write_text(config.read_text() + "\n[drift]\ntolerance_seconds = 86400\n")
        quiet = settled_repo.cli("drift", "--revision", "main", "--strict-drift")
        assert quiet.exit_code == 0
        assert quiet.stdout.strip() == "no drift findings"


class TestSync:
    def test_rerun_reports_unchanged(self, settled_repo):
        result = settled_repo.cli("sync")
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "sync: 2 requirement(s) from " + str(settled_repo.root / "requirements")
        assert re.match(r"^sync: snapshot sha256:[0-9a-f]{64}$", lines[1])
        assert lines[-1] == "sync: 0 created, 0 overwritten, 0 deleted, 3 unchanged"

    def test_transitions_printed(self, settled_repo):
        settled_repo.write(
            "requirements/swr-102.md",
            req_md("SWR-102", "Reject stale sensor readings", "Deprecated", "2026-02-18T14:32:00Z"),
        )
        result = settled_repo.cli("sync")
        assert "sync: SWR-102: Active -> Deprecated (grace 2)" in result.stdout.splitlines()

    def test_resurrection_is_an_operational_error(self, settled_repo):
        settled_repo.write(
            "requirements/swr-102.md",
            req_md("SWR-102", "Reject stale sensor readings", "Removed", "2026-02-19T00:00:00Z"),
        )
        settled_repo.cli("sync")
        settled_repo.write(
            "requirements/swr-102.md",
            req_md("SWR-102", "Reject stale sensor readings", "Approved", "2026-02-20T00:00:00Z"),
        )
        result = settled_repo.cli("sync")
        assert result.exit_code == 2
        assert "new id" in result.stderr

    def test_mock_alm_source(self, settled_repo):
        payload = {
            "requirements": [
                {
                    "id": "SWR-101",
                    "title": "Validate sensor range on input",
                    "status": "Approved",
                    "last_modified": "2026-01-20T09:00:00Z",
                    "category": "SWR",
                },
                {
                    "id": "SWR-102",
                    "title": "Reject stale sensor readings",
                    "status": "Approved",
                    "last_modified": "2026-01-20T09:05:00Z",
                    "category": "SWR",
                },
            ]
        }
        (settled_repo.root / "alm.json").write_text(json.dumps(payload))
        config = settled_repo.root / "reqtocode.ini"
        config.write_text(
            config.read_text().replace("kind = files", "kind = mock-alm").replace(
                "path = requirements", "path = alm.json"
            )
        )
        result = settled_repo.cli("sync")
        assert result.exit_code == 0
        # Identical content, identical artifacts: nothing to rewrite.
        assert "0 created, 0 overwritten, 0 deleted, 3 unchanged" in result.stdout

    def test_missing_config_is_operational_error(self, settled_repo):
        from click.testing import CliRunner

        from reqtocode.cli import main as cli_main

        runner = CliRunner()
        result = runner.invoke(
            cli_main, ["--config", str(settled_repo.root / "ghost.ini"), "sync"]
        )
        assert result.exit_code == 2
