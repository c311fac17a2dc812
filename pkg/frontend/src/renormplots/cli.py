"""Figure rendering command: one spec file, or every run in a directory.

`render --spec PATH` draws a single figure from a JSON spec.
`render --all DIR` scans DIR for run manifests and draws the default
figure set for each command family (eigenvalue traces for detections,
refinement cadence and resolution staircase for refining runs, energy
decay and velocity fields for follow runs).

Exit codes: 0 ok, 2 bad arguments or spec, 3 input schema mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .figures import DETAIL_WINDOW, FigureSpec, RenderResult, SchemaError, render, spec_from_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCHEMA = 3


def _trace_outputs(manifest: dict) -> list[str]:
    return [
        p for p in manifest.get("outputs", ())
        if p.endswith(".csv") and not p.endswith(".velocity.csv")
    ]


def _velocity_outputs(manifest: dict) -> list[str]:
    return [p for p in manifest.get("outputs", ()) if p.endswith(".velocity.csv")]


def _resolve(paths: list[str], base: Path) -> list[str]:
    """Manifest outputs may be absolute or recorded from another cwd."""
    out = []
    for p in paths:
        cand = Path(p)
        if not cand.exists():
            cand = base / Path(p).name
        out.append(str(cand))
    return out


def default_specs(directory: Path) -> list[FigureSpec]:
    """The standard figure set for every manifest found in a directory."""
    specs: list[FigureSpec] = []
    oracle = None
    for path in sorted(directory.glob("*.manifest.json")):
        doc = json.loads(path.read_text())
        if doc.get("command") == "oracle":
            outputs = _resolve(_trace_outputs(doc), directory)
            if outputs:
                oracle = outputs[0]
    for path in sorted(directory.glob("*.manifest.json")):
        doc = json.loads(path.read_text())
        command = doc.get("command")
        name = path.name.removesuffix(".manifest.json")
        traces = _resolve(_trace_outputs(doc), directory)
        velocities = _resolve(_velocity_outputs(doc), directory)
        if command == "detect" and traces:
            specs.append(FigureSpec(
                kind="eigenvalue-evolution", inputs=tuple(traces),
                output=str(directory / f"{name}.eigenvalues.png"),
            ))
            specs.append(FigureSpec(
                kind="eigenvalue-detail", inputs=tuple(traces),
                output=str(directory / f"{name}.eigenvalues-detail.png"),
                window=DETAIL_WINDOW,
            ))
        elif command == "refine" and traces:
            specs.append(FigureSpec(
                kind="refinement-intervals", inputs=tuple(traces),
                output=str(directory / f"{name}.refinement-intervals.png"),
            ))
            specs.append(FigureSpec(
                kind="max-resolution-time", inputs=tuple(traces),
                output=str(directory / f"{name}.resolution.png"),
            ))
        elif command == "follow" and traces:
            specs.append(FigureSpec(
                kind="energy-decay", inputs=tuple(traces),
                output=str(directory / f"{name}.energy.png"),
                oracle=oracle,
            ))
        if velocities:
            specs.append(FigureSpec(
                kind="velocity-field", inputs=tuple(velocities),
                output=str(directory / f"{name}.velocity.png"),
            ))
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render figures from trace CSVs emitted by the experiment runner.",
    )
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", type=Path, help="JSON figure spec")
    group.add_argument("--all", type=Path, metavar="DIR", help="render the default set for a results directory")
    args = parser.parse_args(argv)

    try:
        if args.spec is not None:
            doc = json.loads(args.spec.read_text())
            specs = [spec_from_dict(doc)]
        else:
            if not args.all.is_dir():
                print(f"not a directory: {args.all}", file=sys.stderr)
                return EXIT_CONFIG
            specs = default_specs(args.all)
            if not specs:
                print(f"no run manifests found in {args.all}", file=sys.stderr)
                return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        results: list[RenderResult] = [render(s) for s in specs]
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in results:
        print(f"{r.output} ({r.series} series)")
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
