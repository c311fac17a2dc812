"""Figure construction from trace CSVs.

Six figure kinds cover the standard experiment outputs: eigenvalue
traces (full and zoomed), refinement cadence, resolution staircase,
real-space velocity fields, and post-switchover energy decay with an
optional exact-solution overlay.  Inputs are consumed strictly through
the emitted CSV files; one curve is drawn per input file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = (
    "eigenvalue-evolution",
    "eigenvalue-detail",
    "refinement-intervals",
    "max-resolution-time",
    "velocity-field",
    "energy-decay",
)

# the exact trace schema emitted by the runner
TRACE_COLUMNS = (
    "t", "N", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "detB",
    "digits1", "digits2", "E1_full", "E2_full", "E1_red", "E2_red",
    "refine", "switch",
)
VELOCITY_COLUMNS = ("x", "u")

DETAIL_WINDOW = (0.985, 1.005)


class SchemaError(ValueError):
    """An input CSV does not carry the required columns."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    window: tuple[float, float] | None = None
    labels: tuple[str, ...] | None = None
    oracle: str | None = None  # energy-decay overlay CSV

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r} (expected one of {KINDS})")
        if not self.inputs:
            raise ValueError("figure needs at least one input CSV")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise ValueError("labels must match inputs one to one")


@dataclass(frozen=True)
class RenderResult:
    output: Path
    series: int


def spec_from_dict(doc: dict) -> FigureSpec:
    known = {"kind", "inputs", "output", "window", "labels", "oracle"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown figure spec keys: {sorted(unknown)}")
    return FigureSpec(
        kind=doc.get("kind", ""),
        inputs=tuple(str(p) for p in doc.get("inputs", ())),
        output=str(doc.get("output", "figure.png")),
        window=None if doc.get("window") is None else tuple(float(v) for v in doc["window"]),
        labels=None if doc.get("labels") is None else tuple(str(s) for s in doc["labels"]),
        oracle=doc.get("oracle"),
    )


def load_table(path: str | Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a CSV into named float columns, validating the header."""
    path = Path(path)
    with open(path) as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for name in required:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
        rows = [row for row in reader if row]
    data = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(header)))
    return {name: data[:, header.index(name)] for name in required}


def _labels(spec: FigureSpec) -> list[str]:
    if spec.labels is not None:
        return list(spec.labels)
    return [Path(p).stem for p in spec.inputs]


def _finish(fig, ax, spec: FigureSpec, series: int) -> RenderResult:
    ax.legend(fontsize=8)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return RenderResult(output=out, series=series)


def _render_eigenvalues(spec: FigureSpec, detail: bool) -> RenderResult:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in zip(spec.inputs, _labels(spec)):
        cols = load_table(path, ("t", "eig2_re", "detB"))
        keep = cols["detB"] != 0.0  # singular rows carry no eigenvalue
        ax.plot(cols["t"][keep], cols["eig2_re"][keep], label=label, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("second eigenvalue")
    if detail:
        lo, hi = spec.window if spec.window is not None else DETAIL_WINDOW
        ax.set_xlim(lo, hi)
        visible = []
        for path in spec.inputs:
            cols = load_table(path, ("t", "eig2_re", "detB"))
            keep = (cols["detB"] != 0.0) & (cols["t"] >= lo) & (cols["t"] <= hi)
            if np.any(keep):
                visible.append(cols["eig2_re"][keep])
        if visible:
            stack = np.concatenate(visible)
            ax.set_ylim(stack.min() - 0.05 * abs(stack.min()), stack.max() * 1.05)
    elif spec.window is not None:
        ax.set_xlim(*spec.window)
    return _finish(fig, ax, spec, len(spec.inputs))


def _render_refinement_intervals(spec: FigureSpec) -> RenderResult:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in zip(spec.inputs, _labels(spec)):
        cols = load_table(path, ("t", "refine"))
        events = cols["t"][cols["refine"] == 1.0]
        if len(events) >= 2:
            ax.plot(events[1:], np.diff(events), "o-", label=label, lw=1.0)
        else:
            ax.plot([], [], "o-", label=label)
    ax.set_xlabel("refinement time")
    ax.set_ylabel("time since previous refinement")
    if spec.window is not None:
        ax.set_xlim(*spec.window)
    return _finish(fig, ax, spec, len(spec.inputs))


def _render_max_resolution(spec: FigureSpec) -> RenderResult:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in zip(spec.inputs, _labels(spec)):
        cols = load_table(path, ("t", "N"))
        ax.step(cols["t"], cols["N"], where="post", label=label, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("active resolution N")
    ax.set_yscale("log", base=2)
    if spec.window is not None:
        ax.set_xlim(*spec.window)
    return _finish(fig, ax, spec, len(spec.inputs))


def _render_velocity(spec: FigureSpec) -> RenderResult:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in zip(spec.inputs, _labels(spec)):
        cols = load_table(path, VELOCITY_COLUMNS)
        ax.plot(cols["x"], cols["u"], label=label, lw=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    if spec.window is not None:
        ax.set_xlim(*spec.window)
    return _finish(fig, ax, spec, len(spec.inputs))


def _render_energy(spec: FigureSpec) -> RenderResult:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    series = 0
    for path, label in zip(spec.inputs, _labels(spec)):
        cols = load_table(path, ("t", "E1_red"))
        ax.plot(cols["t"], cols["E1_red"], label=label, lw=1.0)
        series += 1
    if spec.oracle is not None:
        cols = load_table(spec.oracle, ("t", "E1"))
        order = np.argsort(cols["t"])
        ax.plot(cols["t"][order], cols["E1"][order], "k--", label="exact", lw=1.2)
        series += 1
    ax.set_xlabel("t")
    ax.set_ylabel("E1")
    if spec.window is not None:
        ax.set_xlim(*spec.window)
    return _finish(fig, ax, spec, series)


def render(spec: FigureSpec) -> RenderResult:
    """Draw one figure; returns the output path and the series count."""
    if spec.kind == "eigenvalue-evolution":
        return _render_eigenvalues(spec, detail=False)
    if spec.kind == "eigenvalue-detail":
        return _render_eigenvalues(spec, detail=True)
    if spec.kind == "refinement-intervals":
        return _render_refinement_intervals(spec)
    if spec.kind == "max-resolution-time":
        return _render_max_resolution(spec)
    if spec.kind == "velocity-field":
        return _render_velocity(spec)
    return _render_energy(spec)
