"""Canonical report serialization: JSON with sorted keys, fixed float format."""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io
import json
import math
import os
import time
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _normalize(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if hasattr(obj, "to_dict"):
        return _normalize(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _normalize(dataclasses.asdict(obj))
    if isinstance(obj, Mapping):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_normalize(v) for v in obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(obj, indent: int, level: int, out: list) -> None:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, key in enumerate(sorted(obj)):
            out.append(("," if k else "") + pad + json.dumps(key) + ": ")
            _encode(obj[key], indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for k, v in enumerate(obj):
            out.append(("," if k else "") + pad)
            _encode(v, indent, level + 1, out)
        out.append(end + "]")
    elif isinstance(obj, float):
        out.append(format_float(obj))
    else:
        out.append(json.dumps(obj))


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, rationals as n/d."""
    out: list = []
    _encode(_normalize(obj), indent, 0, out)
    return "".join(out) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(subcommand: str, parameters: Mapping, inputs: Iterable = ()) -> dict:
    """Run provenance block embedded in every emitted report.

    ``SOURCE_DATE_EPOCH`` pins the timestamp so reruns are byte-identical.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(epoch) if epoch is not None else int(time.time())
    return {
        "subcommand": subcommand,
        "parameters": dict(parameters),
        "input_digests": {str(p): file_digest(p) for p in inputs},
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(stamp)),
    }


def to_csv(rows: Sequence[Mapping], columns: Sequence[str] | None = None,
           manifest_block: Mapping | None = None) -> str:
    """CSV export of a flat table; the manifest rides along as ``#`` comments."""
    buf = io.StringIO()
    if manifest_block is not None:
        flat = "".join(line.strip() for line in dumps(manifest_block, indent=0).splitlines())
        buf.write("# manifest " + flat + "\n")
    columns = list(columns or (rows[0].keys() if rows else []))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for c in columns:
            v = _normalize(row.get(c))
            cells.append(format_float(v) if isinstance(v, float) else v)
        writer.writerow(cells)
    return buf.getvalue()


def emit(text: str, destination=None) -> None:
    """Write to a path, or to stdout when ``destination`` is None or ``-``."""
    if destination is None or str(destination) == "-":
        print(text, end="")
        return
    Path(destination).write_text(text)
