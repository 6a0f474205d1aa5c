"""Configuration parsing and the command line pipeline."""

import csv
import json
from pathlib import Path

import pytest

from covwobble import parse_config
from covwobble.cli import main, run_command
from covwobble.errors import ValidationError

SMALL = {
    "m": 2,
    "a": 1.0,
    "b": 2.0,
    "targets": [[[1.0, 0.0], [0.0, 1.0]]],
    "delta": 5.0,
    "depth": 3,
    "grid_size": 2 ** 15,
    "fejer_scan_cap": 2 ** 13,
    "scheme_cap": 2 ** 14,
    "replicates": 300,
    "mc_level": 2,
    "gap_max": 150,
    "window_past": 16,
    "window_future": 16,
    "master_seed": 11,
}


def small_config(tmp_path, **kw):
    data = dict(SMALL)
    data["out_dir"] = str(tmp_path / "out")
    data.update(kw)
    return data


class TestParseConfig:
    def test_defaults_fill_in(self):
        cfg = parse_config({"m": 2})
        assert cfg.depth == 6
        assert cfg.scheme == "fejer"
        assert cfg.normalization == {}

    def test_band_order_enforced(self):
        with pytest.raises(ValidationError) as err:
            parse_config({"a": 2.0, "b": 1.0})
        assert "b:" in str(err.value)

    def test_target_out_of_band_names_eigenvalue(self):
        with pytest.raises(ValidationError) as err:
            parse_config({"targets": [[[3.0, 0.0], [0.0, 1.5]]]})
        assert "targets[0]" in str(err.value)
        assert "3" in str(err.value)

    def test_tau_normalized_and_recorded(self):
        cfg = parse_config({"tau": 1.8})
        assert cfg.tau == 0.5
        assert cfg.normalization["tau"]["given"] == 1.8

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            parse_config({"no_such_field": 1})

    def test_overrides_win(self):
        cfg = parse_config({"depth": 5}, {"depth": 2, "master_seed": None})
        assert cfg.depth == 2

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(SMALL))
        cfg = parse_config(path)
        assert cfg.replicates == 300


class TestCommands:
    def test_decompose_writes_expected_weights(self, tmp_path):
        cfg = parse_config(small_config(tmp_path))
        report, status = run_command("decompose", cfg)
        assert status == 0
        rows = list(csv.DictReader(
            (Path(cfg.out_dir) / "decomposition.csv").open()))
        weights = {(r["kind"], r["index"]): float(r["weight"]) for r in rows}
        gamma = 1.0 / 80.0
        assert weights[("c1", "0")] == pytest.approx(1.0)
        assert weights[("c2", "0")] == pytest.approx(13 * gamma, abs=1e-12)
        assert weights[("c2", "1")] == pytest.approx(13 * gamma, abs=1e-12)
        assert weights[("c3", "0")] == pytest.approx(3 * gamma, abs=1e-12)

    def test_full_pipeline_passes_and_writes_outputs(self, tmp_path):
        cfg = parse_config(small_config(tmp_path))
        report, status = run_command("full", cfg)
        assert status == 0
        out = Path(cfg.out_dir)
        for name in ("report.json", "levels.csv", "coefficients.csv",
                     "simulation.csv", "mixing_decay.csv", "checks.csv",
                     "coefficient_gaps.png", "wobble_gaps.png",
                     "mixing_decay.png", "covariance_compare.png"):
            assert (out / name).exists(), name
        doc = json.loads((out / "report.json").read_text())
        assert doc["schema_version"] == 1
        assert doc["config"]["master_seed"] == 11
        assert doc["constants"]["L"] == 1
        assert all(c["passed"] for c in doc["checks"])

    def test_identical_seeds_reproduce_payload(self, tmp_path):
        cfg1 = parse_config(small_config(tmp_path / "a"))
        cfg2 = parse_config(small_config(tmp_path / "b"))
        rep1, _ = run_command("full", cfg1)
        rep2, _ = run_command("full", cfg2)
        doc1 = json.loads((Path(cfg1.out_dir) / "report.json").read_text())
        doc2 = json.loads((Path(cfg2.out_dir) / "report.json").read_text())
        for doc in (doc1, doc2):
            doc["meta"].pop("created_utc")
            doc["config"].pop("out_dir")
        assert json.dumps(doc1, sort_keys=True) == json.dumps(doc2, sort_keys=True)

    def test_fault_injection_fails_run(self, tmp_path):
        cfg = parse_config(small_config(tmp_path, inject_fault="cstar_bump"))
        report, status = run_command("construct", cfg)
        assert status == 1
        failing = [c["name"] for c in report["checks"] if not c["passed"]]
        assert any("starred" in name for name in failing)

    def test_decomposition_fault_injection(self, tmp_path):
        cfg = parse_config(small_config(tmp_path, inject_fault="c2_bounds"))
        report, status = run_command("decompose", cfg)
        assert status == 1

    def test_mixing_command(self, tmp_path):
        cfg = parse_config(small_config(tmp_path))
        report, status = run_command("mixing", cfg)
        assert status == 0
        assert report["mixing"]["process_decay"]["rho"][-1] < 1e-3
        assert "lower bound" in report["mixing"]["caveat"]


class TestMainEntry:
    def test_main_full(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(small_config(tmp_path)))
        status = main(["full", "--config", str(path)])
        out = capsys.readouterr().out
        assert status == 0
        assert "PASS" in out and "FAIL" not in out

    def test_main_rejects_bad_config(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"a": -1.0}))
        assert main(["decompose", "--config", str(path)]) == 2

    def test_main_flag_overrides(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(small_config(tmp_path)))
        status = main([
            "construct", "--config", str(path), "--depth", "2",
            "--out", str(tmp_path / "alt"), "--format", "json",
        ])
        assert status == 0
        doc = json.loads((tmp_path / "alt" / "report.json").read_text())
        assert doc["config"]["depth"] == 2
        assert not (tmp_path / "alt" / "levels.csv").exists()
