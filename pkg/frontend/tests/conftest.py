import json
import shutil
import subprocess

import pytest

RENORMESH = shutil.which("renormesh")


def run_cli(args, out_dir):
    proc = subprocess.run(
        [RENORMESH, *args, "--out", str(out_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def runs_dir(tmp_path_factory):
    """Real runner outputs for every figure family, at toy resolutions."""
    if RENORMESH is None:
        pytest.skip("renormesh CLI not installed")
    out = tmp_path_factory.mktemp("runs")
    fixed = {"mode": "fixed", "cfl": 0.6}

    detect = out / "detect.json"
    detect.write_text(json.dumps({
        "nu": 0.0, "n_start": 32, "sweep": [32, 64],
        "t_end": 1.2, "record_stride": 4, "integrator": fixed,
    }))
    run_cli(["detect", "--config", str(detect)], out)

    refine = out / "refine.json"
    refine.write_text(json.dumps({
        "nu": 0.0, "n_start": 32, "n_final": 128, "tol": 1e-8,
        "t_end": 1.2, "record_stride": 4, "integrator": fixed,
    }))
    run_cli(["refine", "--config", str(refine)], out)

    follow = out / "follow.json"
    follow.write_text(json.dumps({
        "nu": 0.0, "n_start": 32, "n_final": 64, "tol": 1e-8,
        "t_end": 1.4, "record_stride": 4, "integrator": fixed,
        "velocity_output": True,
    }))
    run_cli(["follow", "--config", str(follow)], out)

    run_cli(["oracle", "--times", "0,0.5,0.9", "--samples", "64"], out)
    return out
