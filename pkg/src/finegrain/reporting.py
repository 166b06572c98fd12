"""Bit-stable JSON reports and CSV tables.

JSON is written with sorted keys, reals at 17 significant digits and LF line
endings, so equal inputs give byte-identical files. Files are written to a
temporary sibling and renamed into place: a failed write leaves no artifact.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import is_dataclass
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .harness import TrialReport

__all__ = [
    "EmptyResultsError",
    "dumps",
    "to_jsonable",
    "write_report",
    "read_report",
    "parse_trial_reports",
    "write_table",
    "atomic_write",
]

TOOL = "finegrain"


class EmptyResultsError(ValueError):
    pass


def _real(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = f"{x:.17g}"
    # keep reals recognisable as reals after parsing
    if all(c in "-0123456789" for c in text):
        text += ".0"
    return text


def to_jsonable(obj):
    """Plain JSON types from reports, dataclasses with ``to_dict`` and numpy scalars."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if is_dataclass(obj):
        raise TypeError(f"{type(obj).__name__} has no to_dict()")
    return str(obj)


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _real(obj)
    return json.dumps(obj, ensure_ascii=False)


def dumps(obj, indent: int = 1) -> str:
    """Deterministic JSON text ending in a newline."""
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".finegrain-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(results, path, *, config: dict | None = None, kind: str = "results") -> str:
    """Write ``results`` with the resolved ``config`` and tool version; returns the text.

    Raises
    ------
    EmptyResultsError
        If ``results`` is empty (no file is created).
    """
    if results is None or (hasattr(results, "__len__") and len(results) == 0):
        raise EmptyResultsError("no results to write")
    doc = {"tool": TOOL, "version": __version__, "kind": kind, "config": config or {}, "results": results}
    text = dumps(doc)
    if path is not None:
        atomic_write(path, text)
    return text


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def parse_trial_reports(doc: dict) -> list:
    return [TrialReport.from_dict(r) for r in doc["results"]]


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], *, config: dict | None = None) -> str:
    """CSV with ``#``-prefixed provenance lines (tool version, resolved config)."""
    lines = [f"# {TOOL} {__version__}"]
    if config is not None:
        lines.append("# config " + json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":")))
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                cells.append(f"{float(v):.17g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text
