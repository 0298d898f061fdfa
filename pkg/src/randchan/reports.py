"""Run reports and their CSV / JSON serialization.

A CSV report starts with ``#``-prefixed header lines carrying the config echo
(one JSON object), the software version, wall-clock time and a truncation
marker, followed by an RFC-4180 table.  Everything after the ``#`` block is
the *body*; it depends only on the config and seed.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np


@dataclass
class RunReport:
    config: dict
    columns: List[str]
    rows: List[dict]
    summary: dict = field(default_factory=dict)
    version: str = ""
    wall_clock: float = 0.0
    truncated: bool = False
    error: Optional[str] = None
    invariants_ok: bool = True

    @property
    def ok(self) -> bool:
        return not self.truncated and self.invariants_ok

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "wall_clock_s": self.wall_clock,
            "truncated": self.truncated,
            "error": self.error,
            "invariants_ok": self.invariants_ok,
            "columns": list(self.columns),
            "rows": [_plain(r) for r in self.rows],
            "summary": _plain(self.summary),
        }


def format_value(x) -> str:
    """CSV cell text: floats with 17 significant digits, booleans lower case."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _plain(obj):
    """Convert numpy scalars and non-finite floats to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def csv_body(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def render_csv(report: RunReport) -> str:
    header = [
        f"# version: {report.version}",
        f"# config: {json.dumps(_plain(report.config), sort_keys=True)}",
        f"# wall_clock_s: {report.wall_clock:.3f}",
        f"# truncated: {format_value(report.truncated)}",
        f"# invariants_ok: {format_value(report.invariants_ok)}",
    ]
    if report.error:
        header.append(f"# error: {report.error}")
    if report.summary:
        header.append(f"# summary: {json.dumps(_plain(report.summary), sort_keys=True)}")
    return "\r\n".join(header) + "\r\n" + csv_body(report.columns, report.rows)


def render_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def render(report: RunReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return render_json(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path_or_text):
    """Parse a CSV report into ``(header_lines, columns, rows)``; cells stay strings."""
    text = path_or_text
    if os.path.exists(str(path_or_text)):
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    header, body = split_csv(text)
    reader = csv.reader(io.StringIO(body))
    table = list(reader)
    return header, table[0], [dict(zip(table[0], r)) for r in table[1:]]


def split_csv(text: str):
    """Split CSV report text into its ``#`` header lines and the body."""
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        i += 1
    return [ln.rstrip("\r\n") for ln in lines[:i]], "".join(lines[i:])


def config_from_header(header_lines) -> dict:
    for ln in header_lines:
        if ln.startswith("# config: "):
            return json.loads(ln[len("# config: "):])
    raise ValueError("no config line in report header")
