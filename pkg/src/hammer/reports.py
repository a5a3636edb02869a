"""Deterministic report rendering and the p-value CSV dialect.

Reports carry a JSON record and a CSV table view of the same content.
Rendering is deliberately hand-rolled where it matters for stability:
fields keep insertion order, floats print with 12 significant digits, and
no timestamps or environment details leak in, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .multitest import HypothesisPool
from .priors import ComplexityPrior, complexity_prior_custom

__all__ = [
    "OutputError",
    "Report",
    "format_float",
    "render_json",
    "render_csv",
    "emit_report",
    "parse_pvalue_csv",
    "emit_pvalue_csv",
]


class OutputError(RuntimeError):
    """Raised when a report cannot be written; maps to the internal-error exit."""


def format_float(x) -> str:
    """12-significant-digit decimal form; diff-stable and finer than any
    tolerance the package states."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"reports require finite numbers, got {x}")
    return format(x, ".12g")


def _render_value(obj, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            out.append("  " * (indent + 1) + json.dumps(str(key)) + ": ")
            _render_value(value, out, indent + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(seq):
            out.append("  " * (indent + 1))
            _render_value(value, out, indent + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def render_json(record: dict) -> str:
    out: list[str] = []
    _render_value(record, out, 0)
    return "".join(out) + "\n"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class Report:
    """One result in both shapes: a JSON record and a CSV table."""

    record: dict
    table_header: tuple[str, ...]
    table_rows: list = field(default_factory=list)

    def rendered(self, format: str) -> str:
        if format == "json":
            return render_json(self.record)
        if format == "csv":
            return render_csv(self.table_header, self.table_rows)
        raise ValueError(f"unknown report format {format!r}")


def write_text(text: str, path=None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_report(result: Report, format: str = "json", path=None) -> None:
    """Render and write a report; same result and format give identical bytes."""
    write_text(result.rendered(format), path)


_HEAD_REQUIRED = ("hypothesis_id", "p_value")
_HEAD_OPTIONAL = ("weight", "is_null")


def parse_pvalue_csv(path) -> tuple[HypothesisPool, ComplexityPrior | None]:
    """Read a pool from ``hypothesis_id,p_value[,weight][,is_null]`` rows.

    A weight column, when present, is normalized into a complexity prior.
    Malformed rows are reported with their line number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        cols = tuple(c.strip().lower() for c in head)
        if cols[: len(_HEAD_REQUIRED)] != _HEAD_REQUIRED:
            raise ValueError(
                f"{path}: header must start with {','.join(_HEAD_REQUIRED)!r}, "
                f"got {','.join(head)!r}"
            )
        extras = cols[len(_HEAD_REQUIRED):]
        bad = [c for c in extras if c not in _HEAD_OPTIONAL]
        if bad or len(set(extras)) != len(extras):
            raise ValueError(f"{path}: unsupported or repeated columns {list(extras)}")
        ids: list[str] = []
        seen: set[str] = set()
        p_values: list[float] = []
        weights: list[float] = []
        nulls: list[bool] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(cols):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(cols)} columns, got {len(row)}"
                )
            hid = row[0].strip()
            if not hid:
                raise ValueError(f"{path}:{lineno}: empty hypothesis id")
            if hid in seen:
                raise ValueError(f"{path}:{lineno}: duplicate hypothesis id {hid!r}")
            seen.add(hid)
            try:
                p = float(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed p-value {row[1]!r}") from None
            if not 0.0 <= p <= 1.0:
                raise ValueError(
                    f"{path}:{lineno}: p-value {p} for {hid!r} outside [0, 1]"
                )
            ids.append(hid)
            p_values.append(p)
            for col, raw in zip(extras, row[2:]):
                if col == "weight":
                    try:
                        weights.append(float(raw))
                    except ValueError:
                        raise ValueError(
                            f"{path}:{lineno}: malformed weight {raw!r}"
                        ) from None
                else:
                    flag = raw.strip()
                    if flag not in ("0", "1"):
                        raise ValueError(
                            f"{path}:{lineno}: is_null must be 0 or 1, got {raw!r}"
                        )
                    nulls.append(flag == "1")
    if not ids:
        raise ValueError(f"{path}: no hypotheses in the data section")
    pool = HypothesisPool(
        ids=tuple(ids), p_values=np.array(p_values),
        null_mask=np.array(nulls, dtype=bool) if "is_null" in extras else None,
    )
    prior = complexity_prior_custom(weights) if "weight" in extras else None
    return pool, prior


def emit_pvalue_csv(pool: HypothesisPool, path=None,
                    prior: ComplexityPrior | None = None) -> None:
    """Write a pool back out in the input dialect, at full float precision
    so parsing the file reproduces the pool exactly."""
    header = list(_HEAD_REQUIRED)
    if prior is not None:
        if prior.m != pool.m:
            raise ValueError(f"prior sized for {prior.m}, pool has {pool.m}")
        header.append("weight")
    if pool.null_mask is not None:
        header.append("is_null")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, hid in enumerate(pool.ids):
        row = [hid, repr(float(pool.p_values[i]))]
        if prior is not None:
            row.append(repr(float(prior.weights[i])))
        if pool.null_mask is not None:
            row.append("1" if pool.null_mask[i] else "0")
        writer.writerow(row)
    write_text(buf.getvalue(), path)
