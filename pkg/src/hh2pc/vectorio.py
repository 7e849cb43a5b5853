"""Reading and writing input vectors.

Two on-disk forms are supported: a text form with one signed decimal integer
per line (exactly n lines), and a JSON array. Both reject values whose
magnitude exceeds the per-party bound m.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .terms import as_vector


def _check(values: list[int], n: int, m: int) -> np.ndarray:
    if len(values) != n:
        raise ValueError(f"expected {n} values, got {len(values)}")
    for v in values:
        if abs(v) > m:
            raise ValueError(f"value {v} out of range [-{m}, {m}]")
    return as_vector(values)


def parse_vector_lines(text: str, n: int, m: int) -> np.ndarray:
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            values.append(int(s))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: not an integer: {s!r}") from exc
    return _check(values, n, m)


def parse_vector_json(text: str, n: int, m: int) -> np.ndarray:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("JSON vector must be an array")
    values = []
    for v in data:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"JSON vector entries must be integers, got {v!r}")
        values.append(v)
    return _check(values, n, m)


def load_vector(path: str | Path, n: int, m: int) -> np.ndarray:
    """Load a vector file, dispatching on the .json extension."""
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".json":
        return parse_vector_json(text, n, m)
    return parse_vector_lines(text, n, m)


def dump_vector_lines(values, path: str | Path) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))


def dump_vector_json(values, path: str | Path) -> None:
    Path(path).write_text(json.dumps([int(v) for v in values]))
