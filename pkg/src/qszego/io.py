"""CSV and JSON formats shared by the library and the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .heisenberg import GroupPoint


class InputError(ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def group_header(n: int) -> list[str]:
    return ["t1", "t2", "t3"] + [f"y{i}" for i in range(1, 4 * (n - 1) + 1)]


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def read_table(path, min_cols: int = 1) -> tuple[list[str], np.ndarray]:
    """Read a headed numeric CSV; every malformed row raises with its line number."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty file", 1) from None
    if len(header) < min_cols:
        raise InputError(f"expected at least {min_cols} columns, got {len(header)}", 1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise InputError(str(exc), lineno) from None
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def n_from_header(header: Sequence[str], extra: int = 0) -> int:
    """Infer n from a 't1,t2,t3,y1..' header followed by ``extra`` trailing columns."""
    m = len(header) - 3 - extra
    if m < 4 or m % 4:
        raise InputError(f"cannot infer n from {len(header)} columns", 1)
    n = m // 4 + 1
    if list(header[: 3 + m]) != group_header(n):
        raise InputError(f"header must start with {','.join(group_header(n))}", 1)
    return n


def read_points(path) -> GroupPoint:
    header, data = read_table(path, min_cols=7)
    n = n_from_header(header)
    return GroupPoint(data[:, :3], data[:, 3:3 + 4 * (n - 1)])


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt(c) for c in row))
    text = "\n".join(lines) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, repr floats (which round-trip), non-finite as strings."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    text = dumps(obj)
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def group_point_dict(g: GroupPoint) -> dict:
    return {"t": np.asarray(g.t, dtype=float).tolist(), "y": np.asarray(g.y, dtype=float).tolist()}
