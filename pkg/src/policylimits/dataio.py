"""CSV and JSON formats.

Data files: header ``x1,...,xd,a,l``; ``a`` a nonnegative integer action,
``l`` a finite loss; UTF-8, LF newlines, ``.`` decimal separator. Output
files start with ``#`` comment lines carrying the library version and the
full run configuration, so ``pandas.read_csv(path, comment="#")`` and
similar readers consume them directly.

Floats are written with ``repr``, the shortest string that round-trips.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset

FORMAT_VERSION = 1


class SchemaError(ValueError):
    """Input file does not follow the expected layout."""


def fmt(v: float) -> str:
    return repr(float(v))


def header_lines(config: dict) -> list[str]:
    from . import __version__

    return [f"# policylimits {__version__} format {FORMAT_VERSION}",
            "# config: " + json.dumps(config, sort_keys=True)]


def write_text(path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_config(path) -> dict:
    """The run configuration embedded in an output CSV."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
            if not line.startswith("#"):
                break
    raise SchemaError(f"{path}: no embedded config")


def _data_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1) if not line.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    reader = csv.reader(io.StringIO("".join(line for _, line in lines)))
    rows = list(reader)
    return [i for i, _ in lines], rows


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]]
    line_numbers: list[int]
    path: str

    def column(self, name: str) -> int:
        try:
            return self.header.index(name)
        except ValueError:
            raise SchemaError(f"{self.path}: missing column {name!r} (have {', '.join(self.header)})") from None


def read_table(path) -> Table:
    lines, rows = _data_rows(path)
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for ln, row in zip(lines[1:], body):
        if len(row) != len(header):
            raise SchemaError(f"{path}: line {ln}: expected {len(header)} fields, got {len(row)}")
    return Table(header, body, lines[1:], str(path))


def _parse_float(tab: Table, r: int, c: int, allow_missing: bool = False) -> float:
    raw = tab.rows[r][c].strip()
    if raw == "" and allow_missing:
        return math.nan
    try:
        v = float(raw)
    except ValueError:
        raise SchemaError(f"{tab.path}: line {tab.line_numbers[r]}, column {tab.header[c]!r}: "
                          f"not a number: {raw!r}") from None
    if not math.isfinite(v):
        raise SchemaError(f"{tab.path}: line {tab.line_numbers[r]}, column {tab.header[c]!r}: "
                          f"value must be finite")
    return v


def read_covariates(tab: Table, columns: Sequence[str], impute_median: bool = False) -> np.ndarray:
    idx = [tab.column(c) for c in columns]
    X = np.array([[_parse_float(tab, r, c, allow_missing=True) for c in idx]
                  for r in range(len(tab.rows))], dtype=float).reshape(len(tab.rows), len(idx))
    missing = np.isnan(X)
    if missing.any():
        if not impute_median:
            r, c = np.argwhere(missing)[0]
            raise SchemaError(f"{tab.path}: line {tab.line_numbers[r]}, column {columns[c]!r}: "
                              f"missing value (use --impute-median)")
        for j in np.flatnonzero(missing.any(axis=0)):
            observed = X[~missing[:, j], j]
            if observed.size == 0:
                raise SchemaError(f"{tab.path}: column {columns[j]!r} has no observed values")
            X[missing[:, j], j] = np.median(observed)
    return X


def read_actions(tab: Table, column: str = "a") -> np.ndarray:
    c = tab.column(column)
    out = np.empty(len(tab.rows), dtype=np.int64)
    for r in range(len(tab.rows)):
        raw = tab.rows[r][c].strip()
        try:
            v = int(raw)
        except ValueError:
            v = -1
        if v < 0:
            raise SchemaError(f"{tab.path}: line {tab.line_numbers[r]}, column {column!r}: "
                              f"action must be a nonnegative integer, got {raw!r}")
        out[r] = v
    return out


def covariate_columns(tab: Table, exclude: Sequence[str]) -> list[str]:
    return [h for h in tab.header if h not in exclude]


def read_dataset(path, action_col: str = "a", loss_col: str = "l", impute_median: bool = False,
                 action_count: int | None = None) -> Dataset:
    tab = read_table(path)
    a = read_actions(tab, action_col)
    lc = tab.column(loss_col)
    loss = np.array([_parse_float(tab, r, lc) for r in range(len(tab.rows))])
    cols = covariate_columns(tab, (action_col, loss_col))
    if not cols:
        raise SchemaError(f"{path}: no covariate columns")
    if len(tab.rows) == 0:
        raise SchemaError(f"{path}: no data rows")
    X = read_covariates(tab, cols, impute_median)
    k = action_count or max(2, int(a.max()) + 1)
    return Dataset(X, a, loss, k)


def dataset_lines(X: np.ndarray, a: np.ndarray, loss: np.ndarray | None = None) -> list[str]:
    d = X.shape[1]
    head = [f"x{j + 1}" for j in range(d)] + ["a"] + ([] if loss is None else ["l"])
    lines = [",".join(head)]
    for i in range(X.shape[0]):
        fields = [fmt(v) for v in X[i]] + [str(int(a[i]))]
        if loss is not None:
            fields.append(fmt(loss[i]))
        lines.append(",".join(fields))
    return lines


def write_dataset(path, dataset: Dataset, config: dict | None = None) -> None:
    lines = header_lines(config) if config is not None else []
    write_text(path, lines + dataset_lines(dataset.X, dataset.a, dataset.loss))


def read_probability_table(path, action_count: int | None = None):
    """Read ``x1..xd,p0..pK`` rows into a :class:`~policylimits.core.TablePolicy`."""
    from .core import TablePolicy

    tab = read_table(path)
    pcols = [h for h in tab.header if h.startswith("p") and h[1:].isdigit()]
    if not pcols:
        raise SchemaError(f"{path}: policy table needs columns p0, p1, ...")
    pcols.sort(key=lambda h: int(h[1:]))
    xcols = [h for h in tab.header if h not in pcols]
    X = read_covariates(tab, xcols)
    P = read_covariates(tab, pcols)
    try:
        return TablePolicy.from_arrays(X, P)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def json_path(path) -> Path:
    return Path(path).with_suffix(".json")


def ell_field(v: float) -> tuple[str, str]:
    return ("", "true") if math.isinf(v) else (fmt(v), "false")
