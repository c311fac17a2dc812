import json

import pytest

from renormplots.cli import EXIT_CONFIG, EXIT_OK, EXIT_SCHEMA, default_specs, main


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestSpecMode:
    def test_single_spec(self, runs_dir, tmp_path, capsys):
        spec = write_spec(tmp_path, {
            "kind": "eigenvalue-evolution",
            "inputs": [str(runs_dir / "detect-N32.csv"),
                       str(runs_dir / "detect-N64.csv")],
            "output": str(tmp_path / "eigs.png"),
        })
        assert main(["--spec", str(spec)]) == EXIT_OK
        assert (tmp_path / "eigs.png").exists()
        assert "2 series" in capsys.readouterr().out

    def test_schema_mismatch_names_column(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,N\n0.0,32\n")
        spec = write_spec(tmp_path, {
            "kind": "eigenvalue-evolution",
            "inputs": [str(bad)],
            "output": str(tmp_path / "eigs.png"),
        })
        assert main(["--spec", str(spec)]) == EXIT_SCHEMA
        assert "eig2_re" in capsys.readouterr().err

    def test_bad_spec_key(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"kind": "energy-decay", "inputs": ["a.csv"],
                                     "output": "o.png", "dpi": 300})
        assert main(["--spec", str(spec)]) == EXIT_CONFIG
        assert "spec error" in capsys.readouterr().err

    def test_empty_inputs(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"kind": "energy-decay", "inputs": [],
                                     "output": "o.png"})
        assert main(["--spec", str(spec)]) == EXIT_CONFIG


class TestAllMode:
    def test_empty_directory(self, tmp_path, capsys):
        assert main(["--all", str(tmp_path)]) == EXIT_CONFIG
        assert "no run manifests" in capsys.readouterr().err

    def test_missing_directory(self, tmp_path, capsys):
        assert main(["--all", str(tmp_path / "nope")]) == EXIT_CONFIG

    def test_default_specs_cover_commands(self, runs_dir):
        specs = default_specs(runs_dir)
        kinds = sorted(s.kind for s in specs)
        assert kinds == [
            "eigenvalue-detail",
            "eigenvalue-evolution",
            "energy-decay",
            "max-resolution-time",
            "refinement-intervals",
            "velocity-field",
        ]
        energy = next(s for s in specs if s.kind == "energy-decay")
        assert energy.oracle is not None and energy.oracle.endswith("oracle.csv")

    def test_all_renders_everything(self, runs_dir, capsys):
        assert main(["--all", str(runs_dir)]) == EXIT_OK
        out = capsys.readouterr().out
        assert len(out.strip().splitlines()) == 6
        for suffix in ("eigenvalues.png", "eigenvalues-detail.png",
                       "refinement-intervals.png", "resolution.png",
                       "energy.png", "velocity.png"):
            assert any(p.name.endswith(suffix) for p in runs_dir.iterdir()), suffix
