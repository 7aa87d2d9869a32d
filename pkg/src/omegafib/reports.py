"""Deterministic artifact writers.

Every artifact (CSV or JSON) carries a schema version and a verbatim echo
of the config that produced it.  Writers avoid all nondeterminism: keys are
sorted, floats are repr'd, nothing timestamps itself.  Non-finite floats
serialize as the strings "inf" / "-inf" / "nan" so the JSON stays strict.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"

__all__ = ["SCHEMA_VERSION", "sanitize", "fmt_cell", "write_csv", "write_json", "config_echo"]


def sanitize(obj):
    """Recursively convert to strictly-JSON-serializable deterministic data."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, Fraction):
        return "%d/%d" % (obj.numerator, obj.denominator)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    return obj


def fmt_cell(v) -> str:
    if isinstance(v, (np.integer,)):
        v = int(v)
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return "%d/%d" % (v.numerator, v.denominator)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def config_echo(config: dict) -> str:
    return json.dumps(sanitize(config), sort_keys=True, separators=(",", ":"))


def write_csv(path, artifact: str, config: dict, header, rows) -> None:
    """CSV with '#'-prefixed provenance lines, then header, then data."""
    lines = [
        "# schema_version=%s" % SCHEMA_VERSION,
        "# artifact=%s" % artifact,
        "# config=%s" % config_echo(config),
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, artifact: str, config: dict, body: dict) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "artifact": artifact,
        "config": sanitize(config),
        "data": sanitize(body),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
