"""Deterministic JSON and CSV reports with provenance.

Every report is an envelope::

    {"tool": {"name", "version"}, "command", "config", "inputs", "result"}

where ``inputs`` maps each input role to its path and sha256 digest.  JSON
is canonical (sorted keys, fixed indentation); CSV is a flat projection.

CSV layouts:

* ``eigen`` and ``solve``: columns ``field,vertex,value``.  Vertex-valued
  fields (``eigenfunction``, ``u``) give one row per vertex; every other
  leaf gives one row with an empty ``vertex``.  Provenance rows come first
  with fields prefixed ``tool.``, ``config.`` and ``inputs.``.
* ``verify``: columns ``check,relation,lhs,rhs,passed``.  Provenance rows
  come first with ``relation`` set to ``meta`` and the value in ``lhs``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

from . import __version__

TOOL = {"name": "plapgraph", "version": __version__}
VERTEX_FIELDS = ("eigenfunction", "u")
FIELD_COLUMNS = ("field", "vertex", "value")
CHECK_COLUMNS = ("check", "relation", "lhs", "rhs", "passed")


def digest(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def envelope(command: str, config: dict, inputs: dict[str, str], result: dict) -> dict:
    return {
        "tool": dict(TOOL),
        "command": command,
        "config": config,
        "inputs": {role: {"path": str(p), "sha256": digest(p)}
                   for role, p in sorted(inputs.items())},
        "result": result,
    }


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays strict."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        if prefix.rsplit(".", 1)[-1] in VERTEX_FIELDS:
            for v in sorted(obj):
                rows.append((prefix, v, obj[v]))
            return
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}.{i}", v, rows)
    else:
        rows.append((prefix, "", obj))


def _provenance_rows(report: dict) -> list:
    rows: list = []
    for key in ("tool", "config", "inputs"):
        _flatten(key, report[key], rows)
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    report = _clean(report)
    if report["command"] == "verify":
        w.writerow(CHECK_COLUMNS)
        for field, _, value in _provenance_rows(report):
            w.writerow((field, "meta", _fmt(value), "", ""))
        for row in report["result"]["checks"]:
            w.writerow(tuple(_fmt(row[c]) for c in CHECK_COLUMNS))
    else:
        w.writerow(FIELD_COLUMNS)
        rows = _provenance_rows(report)
        _flatten("", report["result"], rows)
        for field, vertex, value in rows:
            w.writerow((field, vertex, _fmt(value)))
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
