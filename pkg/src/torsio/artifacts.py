"""Deterministic run artifacts.

JSON artifacts carry the exact command line that produced them (minus
the output target), so a run can be replayed bit for bit.  Nothing
derived from the clock or the host goes into an artifact; two runs of
the same command must produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass

import numpy as np

VERSION = "0.1.0"


def to_jsonable(obj):
    """Recursively convert to plain JSON types; infinities become strings."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            raise ValueError("refusing to serialize NaN")
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return to_jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj):
        return to_jsonable(asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def strip_out_option(argv) -> list:
    """Drop `--out PATH` / `--out=PATH` so replay targets stay free."""
    out = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


def dump_json(payload, argv=None) -> str:
    doc = {"tool": "torsio", "version": VERSION, "result": to_jsonable(payload)}
    if argv is not None:
        doc["argv"] = strip_out_option(list(argv))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_json(path, payload, argv=None) -> None:
    with open(path, "w") as f:
        f.write(dump_json(payload, argv))


def read_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _cell(v) -> str:
    if isinstance(v, float) or isinstance(v, np.floating):
        return "%.17g" % float(v)
    return str(v)


def dump_csv(header, rows) -> str:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> None:
    with open(path, "w") as f:
        f.write(dump_csv(header, rows))


def profile_rows(profiles) -> tuple:
    """Flatten Profile objects to (header, rows) for CSV export."""
    header = ("label", "radius", "value")
    rows = []
    for p in profiles:
        for r, v in zip(p.radii, p.values):
            rows.append((p.label, float(r), float(v)))
    return header, rows
