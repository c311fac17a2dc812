import csv
import json
import math
from pathlib import Path

import pytest

from renormesh.cli import (
    CSV_HEADER,
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    load_config,
    main,
    preset_path,
)

FAST_RUN = {
    "nu": 0.0,
    "n_start": 32,
    "t_end": 0.4,
    "record_stride": 4,
    "integrator": {"mode": "fixed", "cfl": 0.6},
}


def write_config(tmp_path: Path, doc: dict, name: str = "run.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestLoadConfig:
    def test_defaults(self):
        cfg, options = load_config({"n_start": 64})
        assert cfg.n_start == 64
        assert cfg.model.name == "t-model"
        assert options["sweep"] is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            load_config({"n_strat": 64})

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            load_config({})

    def test_unknown_model_rejected(self):
        with pytest.raises(ConfigError):
            load_config({"model": "les"})

    def test_domain_violation_becomes_config_error(self):
        with pytest.raises(ConfigError):
            load_config({"nu": -1.0})

    def test_sweep_must_be_list(self):
        with pytest.raises(ConfigError):
            load_config({"sweep": 256})

    def test_galerkin_selected(self):
        cfg, _ = load_config({"model": "galerkin"})
        assert cfg.model.coefficients.a2 == 0.0


class TestPresets:
    def test_all_presets_parse(self):
        base = preset_path("a1-inviscid-sweep").parent
        names = sorted(p.stem for p in base.glob("*.json"))
        assert len(names) >= 10
        for n in names:
            doc = json.loads(preset_path(n).read_text())
            load_config(doc)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_path("a9-hexagonal")


class TestRunCommands:
    def run(self, tmp_path, doc, command="detect", extra=()):
        cfg_path = write_config(tmp_path, doc)
        return main([command, "--config", str(cfg_path), "--out", str(tmp_path), *extra])

    def test_detect_writes_csv_and_manifest(self, tmp_path):
        assert self.run(tmp_path, FAST_RUN) == EXIT_OK
        csv_path = tmp_path / "run.csv"
        manifest_path = tmp_path / "run.manifest.json"
        assert csv_path.exists() and manifest_path.exists()
        lines = csv_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        manifest = json.loads(manifest_path.read_text())
        assert manifest["exit_status"] == "ok"
        assert str(csv_path) in manifest["outputs"]

    def test_csv_rows_conform(self, tmp_path):
        self.run(tmp_path, FAST_RUN)
        with open(tmp_path / "run.csv") as f:
            rows = list(csv.DictReader(f))
        assert rows
        for row in rows:
            assert set(row) == set(CSV_HEADER.split(","))
            assert math.isfinite(float(row["E1_full"]))
            assert row["refine"] in ("0", "1") and row["switch"] in ("0", "1")

    def test_fixed_step_runs_are_deterministic(self, tmp_path):
        self.run(tmp_path, FAST_RUN)
        first = (tmp_path / "run.csv").read_bytes()
        self.run(tmp_path, FAST_RUN)
        assert (tmp_path / "run.csv").read_bytes() == first

    def test_sweep_one_csv_per_resolution(self, tmp_path):
        doc = dict(FAST_RUN, sweep=[32, 64], name="sweep")
        assert self.run(tmp_path, doc) == EXIT_OK
        assert (tmp_path / "sweep-N32.csv").exists()
        assert (tmp_path / "sweep-N64.csv").exists()
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert set(manifest["summary"]["runs"]) == {"sweep-N32", "sweep-N64"}

    def test_check_passes_on_sane_run(self, tmp_path):
        assert self.run(tmp_path, FAST_RUN, extra=["--check"]) == EXIT_OK

    def test_refine_records_events(self, tmp_path):
        doc = dict(FAST_RUN, n_final=64, t_end=1.2)
        assert self.run(tmp_path, doc, command="refine") == EXIT_OK
        with open(tmp_path / "run.csv") as f:
            rows = list(csv.DictReader(f))
        assert any(r["refine"] == "1" for r in rows)

    def test_follow_switches(self, tmp_path):
        doc = dict(FAST_RUN, n_final=64, t_end=1.4)
        assert self.run(tmp_path, doc, command="follow") == EXIT_OK
        manifest = json.loads((tmp_path / "run.manifest.json").read_text())
        assert manifest["summary"]["switch_time"] is not None

    def test_velocity_output(self, tmp_path):
        doc = dict(FAST_RUN, velocity_output=True)
        assert self.run(tmp_path, doc) == EXIT_OK
        lines = (tmp_path / "run.velocity.csv").read_text().splitlines()
        assert lines[0] == "x,u"
        assert len(lines) == 1025

    def test_fixed_step_flag_overrides(self, tmp_path):
        doc = dict(FAST_RUN, integrator={"mode": "adaptive"})
        cfg_path = write_config(tmp_path, doc)
        code = main([
            "detect", "--config", str(cfg_path), "--out", str(tmp_path),
            "--fixed-step", "0.01",
        ])
        assert code == EXIT_OK


class TestExitCodes:
    def test_missing_config_flag(self, tmp_path, capsys):
        assert main(["detect", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        assert main(["detect", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_empty_config(self, tmp_path):
        path = write_config(tmp_path, {})
        assert main(["detect", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_preset(self, tmp_path):
        assert main(["detect", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_env_out_override(self, tmp_path, monkeypatch):
        target = tmp_path / "env-out"
        monkeypatch.setenv("RENORMESH_OUT", str(target))
        path = write_config(tmp_path, FAST_RUN)
        assert main(["detect", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
        assert (target / "run.csv").exists()
        assert not (tmp_path / "run.csv").exists()


class TestOracleCommand:
    def test_energy_at_zero(self, tmp_path):
        assert main(["oracle", "--out", str(tmp_path), "--times", "0", "--samples", "16"]) == EXIT_OK
        with open(tmp_path / "oracle.csv") as f:
            rows = list(csv.DictReader(f))
        assert float(rows[0]["E1"]) == 0.5

    def test_bad_times(self, tmp_path):
        assert main(["oracle", "--out", str(tmp_path), "--times", "a,b"]) == EXIT_CONFIG

    def test_empty_times(self, tmp_path):
        assert main(["oracle", "--out", str(tmp_path), "--times", ","]) == EXIT_CONFIG

    def test_sample_columns(self, tmp_path):
        main(["oracle", "--out", str(tmp_path), "--times", "0.5,2.0", "--samples", "8"])
        lines = (tmp_path / "oracle.csv").read_text().splitlines()
        assert lines[0] == "t,E1," + ",".join(f"u_x{i}" for i in range(8))
        assert len(lines) == 3


class TestCalibrateCommand:
    def test_prints_accepted_tol(self, tmp_path, capsys):
        doc = dict(FAST_RUN, n_final=64, t_end=1.2)
        path = write_config(tmp_path, doc)
        code = main([
            "calibrate", "--config", str(path), "--out", str(tmp_path),
            "--target-digits", "3",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert float(out.strip()) == pytest.approx(1e-16)
