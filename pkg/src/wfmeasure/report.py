"""Deterministic JSON / CSV serialisation of reports."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .metrics import COLUMNS, MetricsReport

SCHEMA_VERSION = 1


def _encode(obj) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(payload: dict, kind: str) -> str:
    """Sorted keys, floats at 17 significant digits, non-finite as null."""
    doc = dict(payload)
    doc["schema_version"] = SCHEMA_VERSION
    doc["kind"] = kind
    return _encode(doc) + "\n"


def metrics_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("id",) + COLUMNS)
    fmt = lambda v: format(v, ".17g")  # noqa: E731
    for m in report.per_image:
        writer.writerow([m.image_id] + [fmt(v) for v in m.row()])
    for e in report.errors:
        writer.writerow([e["id"]] + [""] * len(COLUMNS))
    writer.writerow(["mean"] + [fmt(report.aggregate[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    return buf.getvalue()
