"""RunTrace serialization: plot-ready CSV and a JSON mirror that round-trips."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from caradory.geometry import ConvexCombination
from caradory.solvers import TRACE_FIELDS, IterRecord, RunTrace, Status


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_to_csv(trace, header=None):
    """CSV text; ``header`` entries become leading ``# key: value`` lines."""
    buf = io.StringIO()
    for key, value in (header or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for r in trace.records:
        writer.writerow([_cell(getattr(r, name)) for name in TRACE_FIELDS])
    return buf.getvalue()


def read_trace_csv(text):
    """Parse records back from ``trace_to_csv`` output (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    records = []
    for row in reader:
        def num(key, cast=float):
            return None if row[key] == "" else cast(row[key])

        records.append(
            IterRecord(
                t=int(row["t"]),
                f_value=float(row["f_value"]),
                primal_gap=float(row["primal_gap"]),
                cardinality=int(row["cardinality"]),
                gamma=num("gamma"),
                beta=num("beta"),
                vertex_index=num("vertex_index", int),
                elapsed_ms=float(row["elapsed_ms"]),
            )
        )
    return records


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    return value


def trace_to_json(trace, combination=None, header=None):
    doc = {
        "algorithm": trace.algorithm,
        "step": trace.step,
        "p": "inf" if math.isinf(trace.p) else trace.p,
        "epsilon": trace.epsilon,
        "status": trace.status.value,
        "meta": _jsonable(trace.meta),
        "header": _jsonable(header or {}),
        "fields": list(TRACE_FIELDS) + ["kind"],
        "records": [
            [getattr(r, name) for name in TRACE_FIELDS] + [r.kind] for r in trace.records
        ],
    }
    if combination is not None:
        doc["combination"] = combination.to_json()
    return json.dumps(doc)


def trace_from_json(text):
    """Inverse of ``trace_to_json``: returns ``(RunTrace, ConvexCombination or None)``."""
    doc = json.loads(text)
    fields = doc["fields"]
    records = [IterRecord(**dict(zip(fields, row))) for row in doc["records"]]
    p = doc["p"]
    trace = RunTrace(
        records=records,
        status=Status(doc["status"]),
        algorithm=doc["algorithm"],
        step=doc["step"],
        p=math.inf if p == "inf" else float(p),
        epsilon=doc["epsilon"],
        meta=doc["meta"],
    )
    combo = None
    if "combination" in doc:
        c = doc["combination"]
        combo = ConvexCombination(
            support=[(int(i), float(w)) for i, w in c["support"]],
            point=np.array(c["point"], dtype=float),
        )
    return trace, combo


def write_trace(trace, path, fmt="csv", combination=None, header=None):
    path = Path(path)
    if fmt == "csv":
        path.write_text(trace_to_csv(trace, header))
    elif fmt == "json":
        path.write_text(trace_to_json(trace, combination, header))
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    return path
