"""JSON and CSV output with schema versioning and stable formatting.

Floats are written with Python's shortest round-trip repr; non-finite
values become null.  Keys are sorted so equal results give equal bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .errors import SchemaError
from .phi import spec_from_dict
from .transform import TransformCurve, TransformPoint

SCHEMA_VERSION = 1


def clean(obj):
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(payload: dict) -> str:
    body = dict(clean(payload))
    body["schema"] = SCHEMA_VERSION
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def curve_to_dict(curve: TransformCurve) -> dict:
    return {
        "spec": curve.spec.to_dict(),
        "spec_id": curve.spec.spec_id,
        "grid": curve.grid,
        "meta": curve.solver_meta,
        "samples": [{"t": p.t, "T": p.T, "a_star": p.a_star, "tau_star": p.tau_star, "flags": list(p.flags)}
                    for p in curve.samples],
    }


def _num(v):
    return float("nan") if v is None else float(v)


def curve_from_dict(d: dict) -> TransformCurve:
    try:
        spec = spec_from_dict(d["spec"])
        samples = [TransformPoint(float(s["t"]), _num(s["T"]), s.get("a_star"), s.get("tau_star"),
                                  tuple(s.get("flags", ()))) for s in d["samples"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed curve: {exc}") from None
    return TransformCurve(spec, samples, d.get("grid", {}), d.get("meta", {}))


def _cell(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def curve_csv(curve: TransformCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "T", "a_star", "tau_star"])
    for p in curve.samples:
        w.writerow([_cell(p.t), _cell(p.T), _cell(p.a_star), _cell(p.tau_star)])
    return buf.getvalue()


def rows_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) if isinstance(r[c], (float, int)) and not isinstance(r[c], bool) else r[c]
                    for c in columns])
    return buf.getvalue()
