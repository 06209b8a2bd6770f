"""Deterministic CSV/JSON writers with a provenance header."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


def fmt(value: Any) -> str:
    """CSV cell: floats with 17 significant digits, everything else via str."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def header_lines(config: Mapping[str, Any]) -> list[str]:
    return [f"{k}: {_plain(v)}" for k, v in sorted(config.items())]


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence[Any]], header: Sequence[str] = ()) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _plain(value: Any) -> Any:
    """JSON-safe value: complex numbers as [re, im], arrays as nested lists."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()] if value.ndim else _plain(value.item())
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_json(path, document: Mapping[str, Any]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(dict(document)), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    """Header comment lines (without '# ') and the data rows."""
    comments, body = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            (comments if line.startswith("#") else body).append(line)
    rows = list(csv.DictReader(body))
    return [c[2:].rstrip("\n") for c in comments], rows
