"""Turn netlasso CSV outputs into figure-style images.

Four plot kinds, one per experiment family:

  convergence   log estimation error vs iteration, one curve per trace CSV,
                horizontal reference lines for the centralized/local errors
                when a manifest provides them
  lambda-sweep  log final error vs lambda, distributed and centralized curves
  gamma-scaling inverse critical gamma vs dimension
  m-scaling     communication rounds vs network size

Inputs are parsed strictly against the originating schema; a file that does
not match its kind aborts with a message naming the file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("convergence", "lambda-sweep", "gamma-scaling", "m-scaling")

TRACE_HEADER = ["iter", "avg_est_err", "consensus_err", "objective_G",
                "objective_gap", "mse_test", "elapsed_ms"]
SWEEP_HEADERS = {
    "lambda-sweep": ["lambda", "dist_mean", "dist_std", "cent_mean",
                     "cent_std", "reps"],
    "gamma-scaling": ["d", "s", "N", "gamma_critical", "inv_gamma_critical",
                      "err_ratio", "reps"],
    "m-scaling": ["m", "rho", "gamma_critical", "rounds_to_band",
                  "err_ratio", "reps"],
}


class PlotSchemaError(Exception):
    """Input file missing, empty, or not matching the declared kind."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list
    output: str
    refs: str | None = None       # manifest.json with reference error lines
    xlabel: str | None = None
    ylabel: str | None = None
    logy: bool | None = None      # default decided per kind
    title: str | None = None
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotSchemaError(f"unknown plot kind {self.kind!r}")
        if not self.inputs:
            raise PlotSchemaError("at least one input CSV is required")


def _read_rows(path):
    p = Path(path)
    if not p.exists():
        raise PlotSchemaError(f"{path}: no such file")
    with open(p, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PlotSchemaError(f"{path}: empty file")
    return rows


def _check_header(path, rows, expected):
    if rows[0] != expected:
        raise PlotSchemaError(
            f"{path}: header does not match the declared kind "
            f"(got {rows[0][:3]}..., want {expected[:3]}...)")
    if len(rows) < 2:
        raise PlotSchemaError(f"{path}: no data rows")


def _cell(row, idx):
    return None if row[idx] == "" else float(row[idx])


def load_trace_series(path):
    """(iterations, errors) from a trace CSV; prefers estimation error and
    falls back to test MSE for real-data runs."""
    rows = _read_rows(path)
    _check_header(path, rows, TRACE_HEADER)
    for col in (1, 5):
        xs, ys = [], []
        for row in rows[1:]:
            if len(row) != len(TRACE_HEADER):
                raise PlotSchemaError(f"{path}: ragged trace row")
            err = _cell(row, col)
            if err is not None:
                xs.append(float(row[0]))
                ys.append(err)
        if ys:
            return xs, ys
    raise PlotSchemaError(f"{path}: trace has neither estimation error "
                          f"nor test MSE")


def load_sweep_table(path, kind):
    rows = _read_rows(path)
    _check_header(path, rows, SWEEP_HEADERS[kind])
    table = []
    for row in rows[1:]:
        if len(row) != len(SWEEP_HEADERS[kind]):
            raise PlotSchemaError(f"{path}: ragged sweep row")
        table.append([_cell(row, j) for j in range(len(row))])
    return table


def load_references(spec: PlotSpec):
    path = spec.refs
    if path is None:
        sibling = Path(spec.inputs[0]).parent / "manifest.json"
        if not sibling.exists():
            return {}
        path = sibling
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PlotSchemaError(f"{path}: unreadable manifest: {exc}")
    return manifest.get("references", {})


def _render_convergence(spec, ax):
    for path in spec.inputs:
        xs, ys = load_trace_series(path)
        label = Path(path).stem.replace("trace_", "gamma=")
        ax.plot(xs, ys, label=label)
    refs = load_references(spec)
    if refs.get("centralized_err") is not None:
        ax.axhline(refs["centralized_err"], color="black", linestyle="--",
                   linewidth=1, label="centralized")
    if refs.get("local_err") is not None:
        ax.axhline(refs["local_err"], color="gray", linestyle=":",
                   linewidth=1, label="local")
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or "average estimation error")


def _render_lambda_sweep(spec, ax):
    for path in spec.inputs:
        table = load_sweep_table(path, "lambda-sweep")
        lam = [r[0] for r in table]
        ax.plot(lam, [r[1] for r in table], marker="o", label="distributed")
        ax.plot(lam, [r[3] for r in table], marker="s", label="centralized")
    ax.set_xlabel(spec.xlabel or "lambda")
    ax.set_ylabel(spec.ylabel or "final estimation error")


def _render_gamma_scaling(spec, ax):
    plotted = 0
    for path in spec.inputs:
        table = load_sweep_table(path, "gamma-scaling")
        pts = [(r[0], r[4]) for r in table if r[4] is not None]
        if pts:
            ax.plot(*zip(*pts), marker="o")
            plotted += len(pts)
    if not plotted:
        raise PlotSchemaError("no grid point carries a critical gamma")
    ax.set_xlabel(spec.xlabel or "dimension d")
    ax.set_ylabel(spec.ylabel or "1 / critical gamma")


def _render_m_scaling(spec, ax):
    plotted = 0
    for path in spec.inputs:
        table = load_sweep_table(path, "m-scaling")
        pts = [(r[0], r[3]) for r in table if r[3] is not None]
        if pts:
            ax.plot(*zip(*pts), marker="o")
            plotted += len(pts)
    if not plotted:
        raise PlotSchemaError("no grid point reached the accuracy band")
    ax.set_xlabel(spec.xlabel or "network size m")
    ax.set_ylabel(spec.ylabel or "rounds to centralized band")


_RENDERERS = {
    "convergence": (_render_convergence, True),
    "lambda-sweep": (_render_lambda_sweep, True),
    "gamma-scaling": (_render_gamma_scaling, False),
    "m-scaling": (_render_m_scaling, False),
}


def render(spec: PlotSpec) -> str:
    """Write the raster image for the spec; returns the output path."""
    fn, logy_default = _RENDERERS[spec.kind]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    try:
        fn(spec, ax)
        if spec.logy if spec.logy is not None else logy_default:
            ax.set_yscale("log")
        if spec.title:
            ax.set_title(spec.title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(spec.output, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return spec.output
