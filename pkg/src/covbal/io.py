"""CSV ingestion/export and canonical JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from covbal.data import Dataset, build_dataset
from covbal.errors import InputError


def read_columns(path) -> dict[str, np.ndarray]:
    """Read a headed, UTF-8, '.'-decimal CSV of numbers into named columns.

    Empty cells and non-numeric entries are errors; there is no missing-data
    handling.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        if len(set(header)) != len(header):
            raise InputError(f"{path}: duplicate column names in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(c for c in row if not _is_number(c))
                raise InputError(
                    f"{path}:{lineno}: non-numeric or missing value {bad!r}"
                ) from None
    if not rows:
        raise InputError(f"{path} has a header but no data rows")
    data = np.array(rows, dtype=float)
    return {name: data[:, j] for j, name in enumerate(header)}


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return cell.strip() != ""


def dataset_from_columns(
    columns: dict[str, np.ndarray],
    outcome: str,
    treatment: str,
    covariates: Sequence[str],
    instrument: str | None = None,
) -> Dataset:
    wanted = [outcome, treatment, *covariates] + ([instrument] if instrument else [])
    missing = [c for c in wanted if c not in columns]
    if missing:
        raise InputError(f"columns not found in input: {', '.join(missing)}")
    raw = np.column_stack([columns[c] for c in covariates]) if covariates else np.empty(
        (len(columns[outcome]), 0)
    )
    return build_dataset(
        raw,
        columns[treatment],
        columns[outcome],
        instrument=columns[instrument] if instrument else None,
        names=tuple(covariates),
    )


def write_csv(d: Dataset, path, outcome="y", treatment="w", instrument="z") -> None:
    """Write ``d`` in the CLI's input format (intercept column omitted)."""
    header = [outcome, treatment]
    cols = [d.outcome, d.treatment]
    if d.instrument is not None:
        header.append(instrument)
        cols.append(d.instrument)
    header += list(d.names[1:])
    cols += [d.covariates[:, j] for j in range(1, d.k)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(d.n):
            writer.writerow([_cell(c[i]) for c in cols])


def _cell(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return repr(float(v))


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def to_json(obj, indent: int = 2) -> str:
    """Canonical JSON: sorted keys, 17-significant-digit floats, fixed layout.

    Parsing the output with :func:`json.loads` and passing it back through
    this function reproduces it byte for byte.
    """
    return _encode(obj, 0, indent) + "\n"


def _encode(obj, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{_encode(str(k), 0, indent)}: {_encode(obj[k], level + 1, indent)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_encode(v, level + 1, indent)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
