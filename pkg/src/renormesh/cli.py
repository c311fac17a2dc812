"""Config-driven experiment runner.

Subcommands: detect | refine | follow | calibrate | oracle.  Each run
writes a trace CSV (one per resolution for sweeps) plus a JSON manifest
with summary scalars.  Exit codes: 0 normal, 2 config error, 3 numerical
failure, 4 self-check failure under --check.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .integrate import IntegratorSettings
from .models import ModelKind
from .oracle import NewtonError, energy, eval_velocity
from .spectral import SpectralField, eval_realspace
from .tracker import (
    CalibrationError,
    ExperimentConfig,
    Trace,
    calibrate_tol,
    detect_turning_point,
    run_detect,
    run_follow,
    run_refine,
)

CSV_HEADER = (
    "t,N,eig1_re,eig1_im,eig2_re,eig2_im,detB,digits1,digits2,"
    "E1_full,E2_full,E1_red,E2_red,refine,switch"
)
VELOCITY_HEADER = "x,u"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4


class ConfigError(ValueError):
    pass


def _model_from_name(name: str) -> ModelKind:
    if name in ("t-model", "t_model", "tmodel"):
        return ModelKind.t_model()
    if name == "galerkin":
        return ModelKind.galerkin()
    raise ConfigError(f"unknown model {name!r} (expected 't-model' or 'galerkin')")


def load_config(doc: dict) -> tuple[ExperimentConfig, dict]:
    """Build an ExperimentConfig from a JSON document.

    Returns the config plus the residual run options (sweep list,
    velocity output toggle) that live outside ExperimentConfig.
    """
    if not isinstance(doc, dict) or not doc:
        raise ConfigError("config must be a non-empty JSON object")
    known = {
        "nu", "n_start", "n_final", "tol", "model", "case", "reduced_fraction",
        "t_end", "record_stride", "integrator", "pad_factor", "reset_model_time",
        "sweep", "velocity_output", "name", "target_digits", "strides",
        "force_record_at",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    integ = doc.get("integrator", {})
    if not isinstance(integ, dict):
        raise ConfigError("integrator must be an object")
    try:
        settings = IntegratorSettings(
            mode=integ.get("mode", "adaptive"),
            rtol=float(integ.get("rtol", 1e-10)),
            atol=float(integ.get("atol", 1e-12)),
            dt=None if integ.get("dt") is None else float(integ["dt"]),
            cfl=float(integ.get("cfl", 0.5)),
            initial_dt=float(integ.get("initial_dt", 1e-4)),
        )
        cfg = ExperimentConfig(
            nu=float(doc.get("nu", 0.0)),
            n_start=int(doc.get("n_start", 256)),
            n_final=None if doc.get("n_final") is None else int(doc["n_final"]),
            tol=float(doc.get("tol", 1e-16)),
            model=_model_from_name(doc.get("model", "t-model")),
            case=str(doc.get("case", "I")),
            reduced_fraction=float(doc.get("reduced_fraction", 0.5)),
            t_end=float(doc.get("t_end", 1.1)),
            record_stride=int(doc.get("record_stride", 4)),
            integrator=settings,
            pad_factor=int(doc.get("pad_factor", 1)),
            reset_model_time=bool(doc.get("reset_model_time", False)),
            force_record_at=tuple(float(s) for s in doc.get("force_record_at", ())),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    options = {
        "sweep": doc.get("sweep"),
        "strides": doc.get("strides", {}),
        "velocity_output": bool(doc.get("velocity_output", False)),
        "name": doc.get("name"),
        "target_digits": doc.get("target_digits"),
    }
    if options["sweep"] is not None:
        if not isinstance(options["sweep"], list) or not options["sweep"]:
            raise ConfigError("sweep must be a non-empty list of resolutions")
        options["sweep"] = [int(n) for n in options["sweep"]]
    return cfg, options


def preset_path(name: str) -> Path:
    base = resources.files("renormesh").joinpath("presets")
    p = Path(str(base.joinpath(name + ".json")))
    if not p.exists():
        available = sorted(q.stem for q in Path(str(base)).glob("*.json"))
        raise ConfigError(f"unknown preset {name!r}; available: {available}")
    return p


def write_trace_csv(trace: Trace, path: Path) -> None:
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for r in trace.records:
            f.write(
                f"{r.t:.17e},{r.n_current},"
                f"{r.eig1.real:.17e},{r.eig1.imag:.17e},"
                f"{r.eig2.real:.17e},{r.eig2.imag:.17e},"
                f"{r.detB:.17e},{r.digits1},{r.digits2},"
                f"{r.E1_full:.17e},{r.E2_full:.17e},"
                f"{r.E1_red:.17e},{r.E2_red:.17e},"
                f"{int(r.refinement_event)},{int(r.switchover_event)}\n"
            )


def write_velocity_csv(trace: Trace, path: Path, samples: int = 1024) -> None:
    """Real-space velocity field at the final recorded state of a run."""
    field = trace.final_field
    if field is None:
        raise ConfigError("run carries no final field; cannot write velocity output")
    x = np.arange(samples) * 2.0 * np.pi / samples
    u = eval_realspace(field, x)
    with open(path, "w") as f:
        f.write(VELOCITY_HEADER + "\n")
        for xi, ui in zip(x, u):
            f.write(f"{xi:.17e},{ui:.17e}\n")


def _config_doc(cfg: ExperimentConfig) -> dict:
    doc = asdict(cfg)
    doc["model"] = cfg.model.name
    doc["integrator"] = asdict(cfg.integrator)
    return doc


def trace_summary(trace: Trace) -> dict:
    tp = detect_turning_point(trace)
    last = trace.records[-1] if trace.records else None
    summary = {
        "blow_up": trace.blow_up,
        "t_turn": None if tp is None else tp.t_turn,
        "eig_at_turn": None if tp is None else tp.eig_at_turn,
        "exhaustion_time": trace.exhausted_time,
        "switch_time": trace.switch_time,
        "coefficients": None
        if trace.coefficients is None
        else [trace.coefficients.a1, trace.coefficients.a2],
        "duration_s": trace.duration,
    }
    if last is not None:
        summary["final"] = {
            "t": last.t,
            "N": last.n_current,
            "E1_full": last.E1_full,
            "E2_full": last.E2_full,
            "E1_red": last.E1_red,
            "E2_red": last.E2_red,
        }
    return summary


def write_manifest(path: Path, command: str, cfg: ExperimentConfig, outputs: list[str], summary: dict, duration: float) -> None:
    doc = {
        "command": command,
        "config": _config_doc(cfg),
        "outputs": outputs,
        "summary": summary,
        "duration_s": duration,
        "exit_status": "blow-up" if summary.get("blow_up") else "ok",
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def check_trace(trace: Trace) -> list[str]:
    """Self-check invariants; returns a list of violations (empty = pass)."""
    problems = []
    ts = trace.times()
    if len(ts) and np.any(np.diff(ts) < 0):
        problems.append("time column is not monotone")
    for i, r in enumerate(trace.records):
        if r.b_singular:
            continue
        values = [
            r.t, r.eig1.real, r.eig1.imag, r.eig2.real, r.eig2.imag,
            r.detB, r.E1_full, r.E2_full, r.E1_red, r.E2_red,
        ]
        if not all(math.isfinite(v) for v in values):
            problems.append(f"non-finite value in unflagged row {i} (t={r.t})")
            break
    return problems


def _runner(command: str):
    return {"detect": run_detect, "refine": run_refine, "follow": run_follow}[command]


def _single_run(command: str, cfg: ExperimentConfig) -> Trace:
    return _runner(command)(cfg)


def run_experiment(command: str, cfg: ExperimentConfig, options: dict, out_dir: Path, name: str, check: bool, parallel: int) -> int:
    started = time.perf_counter()
    sweep = options.get("sweep")
    configs: list[tuple[str, ExperimentConfig]]
    if sweep:
        strides = {int(k): int(v) for k, v in (options.get("strides") or {}).items()}
        configs = []
        for n in sweep:
            c = replace(cfg, n_start=n, n_final=n if cfg.n_final is None else cfg.n_final)
            if n in strides:
                c = replace(c, record_stride=strides[n])
            configs.append((f"{name}-N{n}", c))
    else:
        configs = [(name, cfg)]

    if parallel > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            traces = list(pool.map(_single_run, [command] * len(configs), [c for _, c in configs]))
    else:
        traces = [_single_run(command, c) for _, c in configs]

    failures = 0
    outputs = []
    per_run = {}
    for (run_name, run_cfg), trace in zip(configs, traces):
        csv_path = out_dir / f"{run_name}.csv"
        write_trace_csv(trace, csv_path)
        outputs.append(str(csv_path))
        if options.get("velocity_output"):
            vel_path = out_dir / f"{run_name}.velocity.csv"
            write_velocity_csv(trace, vel_path)
            outputs.append(str(vel_path))
        per_run[run_name] = trace_summary(trace)
        if check:
            problems = check_trace(trace)
            if problems:
                failures += 1
                for p in problems:
                    print(f"check failed [{run_name}]: {p}", file=sys.stderr)
    summary = per_run[name] if len(per_run) == 1 else {"runs": per_run, "blow_up": any(s["blow_up"] for s in per_run.values())}
    manifest_path = out_dir / f"{name}.manifest.json"
    write_manifest(manifest_path, command, cfg, outputs, summary, time.perf_counter() - started)
    print(manifest_path)
    return EXIT_CHECK if failures else EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig, options: dict, out_dir: Path, name: str, target: int) -> int:
    started = time.perf_counter()
    try:
        tol = calibrate_tol(cfg, target)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{tol:.1e}")
    summary = {"accepted_tol": tol, "target_digits": target, "blow_up": False}
    write_manifest(out_dir / f"{name}.manifest.json", "calibrate", cfg, [], summary, time.perf_counter() - started)
    return EXIT_OK


def cmd_oracle(times: list[float], samples: int, out_dir: Path, name: str) -> int:
    started = time.perf_counter()
    path = out_dir / f"{name}.csv"
    x = np.arange(samples) * 2.0 * np.pi / samples
    try:
        with open(path, "w") as f:
            f.write("t,E1," + ",".join(f"u_x{i}" for i in range(samples)) + "\n")
            for t in times:
                u = eval_velocity(x, t)
                f.write(f"{t:.17e},{energy(t):.17e}," + ",".join(f"{v:.17e}" for v in u) + "\n")
    except NewtonError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = {"times": times, "samples": samples, "blow_up": False}
    write_manifest(
        out_dir / f"{name}.manifest.json", "oracle",
        ExperimentConfig(), [str(path)], summary, time.perf_counter() - started,
    )
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renormesh",
        description="Singularity detection and tracking for spectral Burgers via renormalization diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("detect", "refine", "follow", "calibrate", "oracle"):
        p = sub.add_parser(cmd)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--preset", help="named built-in config")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (env RENORMESH_OUT overrides)")
        p.add_argument("--check", action="store_true", help="run trace self-checks; exit 4 on violation")
        p.add_argument("--fixed-step", nargs="?", const="auto", default=None, metavar="DT",
                       help="force fixed-step integration (optional explicit step)")
        p.add_argument("--parallel", type=int, default=1, metavar="K", help="run sweep members in K processes")
        if cmd == "calibrate":
            p.add_argument("--target-digits", type=int, default=5)
        if cmd == "oracle":
            p.add_argument("--times", default="0,1,2", help="comma-separated evaluation times")
            p.add_argument("--samples", type=int, default=256)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(os.environ.get("RENORMESH_OUT", str(args.out)))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "oracle":
        try:
            times = [float(s) for s in args.times.split(",") if s.strip()]
        except ValueError:
            print(f"invalid --times list: {args.times!r}", file=sys.stderr)
            return EXIT_CONFIG
        if not times:
            print("empty --times list", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_oracle(times, args.samples, out_dir, "oracle")

    try:
        if args.preset:
            cfg_path = preset_path(args.preset)
            default_name = args.preset
        elif args.config:
            cfg_path = args.config
            default_name = cfg_path.stem
        else:
            print("one of --config or --preset is required", file=sys.stderr)
            return EXIT_CONFIG
        try:
            doc = json.loads(cfg_path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{cfg_path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        cfg, options = load_config(doc)
        if args.fixed_step is not None:
            dt = None if args.fixed_step == "auto" else float(args.fixed_step)
            cfg = replace(cfg, integrator=replace(cfg.integrator, mode="fixed", dt=dt))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    name = options.get("name") or default_name
    if args.command == "calibrate":
        target = args.target_digits if args.target_digits is not None else options.get("target_digits", 5)
        return cmd_calibrate(cfg, options, out_dir, name, target)
    try:
        return run_experiment(args.command, cfg, options, out_dir, name, args.check, args.parallel)
    except (NewtonError, FloatingPointError, ValueError, RuntimeError) as exc:
        # blow-up is handled inside the drivers; anything escaping here is
        # a genuine numerical failure (singular identification, bad field)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
