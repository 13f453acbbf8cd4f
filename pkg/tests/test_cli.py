"""Tests for configuration handling, report formats, snapshots and the command-line entry point."""

import csv
import io
import json
import math
import shutil
import subprocess

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmild.checks import CHECKS, KIND_CHECKS, CheckResult
from nsmild.cli import (
    CSV_COLUMNS,
    DEFAULTS,
    ExperimentConfig,
    VerificationReport,
    emit_report,
    main,
    read_snapshot,
    report_csv,
    report_json,
    series_csv,
    write_snapshot,
)
from nsmild.errors import DomainError, InvalidFieldError, NsmildError
from nsmild.field_core import GridSpec, random_smooth_field

SMALL = """
[grid]
points = 16
[operators]
fields = 3
[heat]
step = 0.125
"""

HOLDER = """
[grid]
points = 16
[holder]
step = 0.00390625
offset_exponents = [3, 4, 5, 6]
spatial_exponents = [2, 3, 4]
interp_samples = 5
[sweeps]
r = [0.0, 0.5]
"""


def write_config(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def record(check_id="heat_reduction", value=1e-12, passed=True, **extra):
    return CheckResult(check_id, "anchor, with comma", value, 1e-10, passed, 1e-10, **extra)


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.kind == "all" and cfg.seed == 0
        assert cfg.get("grid.points") == 32 and cfg.get("solver.final_time") == 0.5

    def test_round_trip(self):
        cfg = ExperimentConfig({"grid.points": 24, "sweeps.r": [0.0, 0.45], "experiment.kind": "kato"})
        again = ExperimentConfig.from_toml(cfg.to_toml())
        assert again.params == cfg.params
        assert again.to_toml() == cfg.to_toml()

    def test_nested_tables_flatten(self):
        cfg = ExperimentConfig.from_toml(SMALL)
        assert cfg.get("grid.points") == 16 and cfg.get("heat.step") == 0.125

    def test_int_promoted_to_float(self):
        cfg = ExperimentConfig.from_toml("solver.final_time = 1\n")
        assert isinstance(cfg.get("solver.final_time"), float)

    @pytest.mark.parametrize(
        "text",
        [
            "grid.pionts = 16\n",
            "grid.points = 'many'\n",
            "solver.step = 0.3\n",
            "sweeps.r = [0.5, 1.0]\n",
            "experiment.kind = 'plot'\n",
            "grid.points = [\n",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            ExperimentConfig.from_toml(text)

    def test_replace(self):
        cfg = ExperimentConfig().replace(experiment__seed=7)
        assert cfg.seed == 7


class TestReports:
    def test_empty_report_is_header_only(self):
        text = report_csv(VerificationReport("all", 0))
        assert text == ",".join(CSV_COLUMNS) + "\n"

    def test_single_row_in_declared_order(self):
        rep = VerificationReport("simulate", 0, [record()])
        rows = list(csv.reader(io.StringIO(report_csv(rep))))
        assert rows[0] == list(CSV_COLUMNS)
        assert len(rows) == 2
        row = dict(zip(rows[0], rows[1]))
        assert row["check_id"] == "heat_reduction"
        assert row["paper_anchor"] == "anchor, with comma"
        assert float(row["value"]) == 1e-12 and row["pass"] == "true"

    def test_json_mirrors_csv(self):
        rep = VerificationReport("simulate", 3, [record(series={"s": ([1.0, 2.0], [3.0, 4.0])}, details={"x": np.float64(np.inf)})])
        doc = json.loads(report_json(rep))
        assert doc["summary"] == {"total": 1, "passed": 1, "failed": 0}
        check = doc["checks"][0]
        assert [k for k in check if k in CSV_COLUMNS] == list(CSV_COLUMNS)
        assert check["series"]["s"] == {"x": [1.0, 2.0], "y": [3.0, 4.0]}
        assert check["details"]["x"] == "inf"

    def test_series_csv(self):
        assert series_csv([1.0, 0.5], [2.0, 3.0]) == "1.0,2.0\n0.5,3.0\n"
        with pytest.raises(DomainError):
            series_csv([1.0], [1.0, 2.0])

    def test_emit_writes_series(self, tmp_path):
        rep = VerificationReport("simulate", 0, [record(series={"decay": ([0.0, 1.0, 2.0], [1.0, 0.5, 0.25])})])
        paths = emit_report(rep, "csv", tmp_path / "out")
        assert (tmp_path / "out" / "report.csv") in paths
        assert (tmp_path / "out" / "series" / "decay.csv").read_text().count("\n") == 3

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(NsmildError):
            emit_report(VerificationReport("all", 0), "csv", blocker / "sub")

    def test_summary_counts(self):
        rep = VerificationReport("all", 0, [record(), record("x", passed=False)])
        assert rep.summary == {"total": 2, "passed": 1, "failed": 1}
        assert not rep.all_passed


class TestSnapshot:
    def test_round_trip(self, tmp_path, rng):
        f = random_smooth_field(GridSpec(8, length=3.0), rng)
        path = tmp_path / "u.nsmild"
        write_snapshot(path, f)
        g = read_snapshot(path)
        assert g.grid == f.grid
        np.testing.assert_array_equal(g.components, f.components)

    def test_layout(self, tmp_path, rng):
        f = random_smooth_field(GridSpec(8), rng)
        path = tmp_path / "u.nsmild"
        write_snapshot(path, f)
        data = path.read_bytes()
        header, body = data.split(b"\n", 1)
        assert header.split()[:3] == [b"NSMILD1", b"3", b"8"]
        assert float(header.split()[3]) == 2 * math.pi
        np.testing.assert_array_equal(np.frombuffer(body, "<f8"), f.components.ravel(order="C"))

    @pytest.mark.parametrize("data", [b"no header", b"WRONG 3 4 1.0\n", b"NSMILD1 3 8 1.0\n\x00\x00"])
    def test_rejects_malformed(self, tmp_path, data):
        path = tmp_path / "bad.nsmild"
        path.write_bytes(data)
        with pytest.raises(InvalidFieldError):
            read_snapshot(path)


class TestCheckRegistry:
    def test_every_criterion_once(self):
        numbers = sorted(n for n, _ in CHECKS.values())
        assert numbers == list(range(1, 14))
        assert set(KIND_CHECKS["all"]) == set(CHECKS)

    def test_kinds_cover_all(self):
        covered = {c for kind, ids in KIND_CHECKS.items() if kind != "all" for c in ids}
        assert covered | {"determinism"} == set(CHECKS)


class TestMain:
    def test_heat_only_simulate_passes(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL + "[solver]\nnonlinear = false\n")
        code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS heat_reduction" in out and "duhamel_consistency" not in out
        rows = list(csv.reader((tmp_path / "out" / "report.csv").open()))
        assert [r[0] for r in rows[1:]] == ["operator_algebra", "heat_reduction"]
        assert read_snapshot(tmp_path / "out" / "final_state.nsmild").grid == GridSpec(16)

    def test_failing_check_exits_one(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL + "[duhamel]\nfactor = 1e-9\n")
        code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out"), "--format", "json"])
        assert code == 1
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        failed = [c["check_id"] for c in doc["checks"] if not c["pass"]]
        assert failed == ["duhamel_consistency"]
        assert "FAIL duhamel_consistency" in capsys.readouterr().out

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "grid.unknown = 1\n")
        assert main(["kato", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "unknown configuration key" in capsys.readouterr().err
        assert main(["kato", "--config", str(tmp_path / "missing.toml")]) == 2

    def test_holder_series_rows_match_offsets(self, tmp_path):
        cfg = write_config(tmp_path, HOLDER)
        main(["holder", "--config", str(cfg), "--out", str(tmp_path / "out")])
        series = tmp_path / "out" / "series"
        for r in ("0", "0.5"):
            assert (series / f"holder_temporal_r{r}.csv").read_text().count("\n") == 4
        assert (series / "holder_spatial_r0.9.csv").read_text().count("\n") == 3

    @pytest.mark.skipif(shutil.which("nsmild") is None, reason="console script not installed")
    def test_console_script(self, tmp_path):
        proc = subprocess.run(["nsmild", "kato", "--config", str(tmp_path / "missing.toml")], capture_output=True, text=True)
        assert proc.returncode == 2 and proc.stderr.startswith("nsmild:")


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(
        points=st.sampled_from([8, 16, 24, 32]),
        seed=st.integers(0, 2**31),
        rs=st.lists(st.floats(0.0, 0.99), min_size=1, max_size=5),
        tol=st.floats(1e-14, 1e-2),
        fmt=st.sampled_from(["csv", "json"]),
    )
    def test_config_round_trip(self, points, seed, rs, tol, fmt):
        cfg = ExperimentConfig(
            {"grid.points": points, "experiment.seed": seed, "sweeps.r": rs, "kato.tol": tol, "experiment.format": fmt}
        )
        assert ExperimentConfig.from_toml(cfg.to_toml()).params == cfg.params

    def test_defaults_round_trip(self):
        assert ExperimentConfig.from_toml(ExperimentConfig().to_toml()).params == ExperimentConfig(dict(DEFAULTS)).params
