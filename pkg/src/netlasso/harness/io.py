"""Fixed-name file formats emitted by the harness.

Trace CSV columns (exact order): iter, avg_est_err, consensus_err,
objective_G, objective_gap, mse_test, elapsed_ms.  Missing metrics are
empty cells; the header row is always present.  Floats carry 17 significant
digits so every file parses back losslessly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..datagen import GroundTruth
from ..errors import DataFormatError
from ..solver import TRACE_COLUMNS, IterationMetrics, RunTrace


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def write_trace_csv(trace: RunTrace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace.metrics:
            cells = [str(row.iter)] + [_fmt(getattr(row, col))
                                       for col in TRACE_COLUMNS[1:]]
            fh.write(",".join(cells) + "\n")


def read_trace_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise DataFormatError(f"{path}: not a trace CSV")
        rows = []
        for raw in reader:
            if len(raw) != len(TRACE_COLUMNS):
                raise DataFormatError(f"{path}: ragged trace row")
            vals = [None if cell == "" else float(cell) for cell in raw[1:]]
            rows.append(IterationMetrics(int(raw[0]), *vals))
    return rows


def write_sweep_csv(columns, rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else
                              ("" if v is None else str(v)) for v in row)
                     + "\n")


def read_sweep_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataFormatError(f"{path}: empty sweep CSV")
        rows = [[None if cell == "" else float(cell) for cell in raw]
                for raw in reader]
    return header, rows


def write_truth_json(truth: GroundTruth, seed, path):
    payload = {
        "theta_star": truth.theta.tolist(),
        "support": [int(j) for j in truth.support],
        "d": truth.d,
        "s": truth.s,
        "l1_norm": truth.l1_norm,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n",
                          encoding="utf-8")


def read_truth_json(path) -> GroundTruth:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return GroundTruth(theta=np.asarray(data["theta_star"], dtype=float),
                       support=np.asarray(data["support"], dtype=int))


def content_hash(spec_dict: dict, data_paths=()) -> str:
    """Content hash of the resolved configuration plus any input files."""
    h = hashlib.sha256()
    h.update(json.dumps(spec_dict, sort_keys=True).encode())
    for p in data_paths:
        p = Path(p)
        if p.exists():
            h.update(p.read_bytes())
    return h.hexdigest()


def write_manifest(path, spec_dict, provenance, extra=None, data_paths=()):
    payload = {
        "spec": spec_dict,
        "provenance": provenance,
        "content_hash": content_hash(spec_dict, data_paths),
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
