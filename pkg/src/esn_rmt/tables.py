"""Fixed CSV schemas for experiment result tables.

One header per experiment kind; Monte-Carlo columns are present only when
the overlay ran.  Floats are serialized with 17 significant digits so the
files round-trip exactly; lines end with \\n and the encoding is UTF-8.
"""

from __future__ import annotations

import csv
import math
from typing import Sequence

from .experiments import ResultRow

FIELD_ORDER = (
    "model", "T", "N", "gamma", "lam", "rho", "teacher_rho", "phi",
    "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
    "mc_estimate", "mc_stderr", "diff_bias2", "diff_variance", "diff_total",
)

_MC_FIELDS = ("mc_estimate", "mc_stderr")
_INT_FIELDS = ("T", "N")

_USED_FIELDS = {
    "double_descent": {
        "model", "T", "N", "gamma", "lam", "teacher_rho", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        *_MC_FIELDS,
    },
    "memory_grid": {
        "model", "T", "N", "lam", "rho", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        *_MC_FIELDS, "diff_bias2", "diff_variance", "diff_total",
    },
    "lambda_sweep": {
        "model", "T", "N", "lam", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        *_MC_FIELDS,
    },
}


def columns(experiment: str, mc_enabled: bool) -> list[str]:
    used = _USED_FIELDS[experiment]
    return [
        f for f in FIELD_ORDER
        if f in used and (mc_enabled or f not in _MC_FIELDS)
    ]


def _format(field: str, value) -> str:
    if field == "model":
        return value
    if field == "diverged":
        return "true" if value else "false"
    if field in _INT_FIELDS:
        return "nan" if value is None else "%d" % value
    if value is None:
        return "nan"
    return "%.17g" % value


def write_csv(path, experiment: str, rows: Sequence[ResultRow], mc_enabled: bool) -> None:
    cols = columns(experiment, mc_enabled)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_format(c, getattr(row, c)) for c in cols])


def infer_experiment(header: Sequence[str]) -> str:
    if "gamma" in header:
        return "double_descent"
    if "diff_total" in header:
        return "memory_grid"
    return "lambda_sweep"


def read_csv(path) -> tuple[str, list[dict]]:
    """Parse a results table back into records; returns (experiment, rows)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        experiment = infer_experiment(header)
        records: list[dict] = []
        for raw in reader:
            rec: dict = {}
            for key, text in raw.items():
                if key == "model":
                    rec[key] = text
                elif key == "diverged":
                    rec[key] = text == "true"
                elif key in _INT_FIELDS:
                    rec[key] = None if text == "nan" else int(text)
                else:
                    value = float(text)
                    rec[key] = None if math.isnan(value) else value
            records.append(rec)
    return experiment, records
