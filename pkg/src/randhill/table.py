"""CSV tables with a ``#`` metadata preamble.

Layout::

    # key: value          (metadata, one per line, insertion order)
    col_a,col_b,...       (header)
    1.5,0.25,...          (rows; floats written with repr so they re-read exactly)
    # summary key: value  (optional trailing summary lines)

Nothing time- or machine-dependent is written, so equal inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["SweepTable", "read_table"]

SUMMARY_PREFIX = "summary "


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _parse(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


@dataclass
class SweepTable:
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: list(v) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k}: {_fmt(v)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        writer.writerow(names)
        for i in range(self.n_rows):
            writer.writerow([_fmt(self.columns[n][i]) for n in names])
        for k, v in self.summary.items():
            buf.write(f"# {SUMMARY_PREFIX}{k}: {_fmt(v)}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        text = self.to_csv()
        if str(path) == "-":
            import sys

            sys.stdout.write(text)
        else:
            Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "SweepTable":
        meta, summary, body = {}, {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                if key.startswith(SUMMARY_PREFIX):
                    summary[key[len(SUMMARY_PREFIX):]] = _parse(val)
                else:
                    meta[key] = _parse(val)
            elif line:
                body.append(line)
        rows = list(csv.reader(body))
        if not rows:
            return cls({}, meta, summary)
        names = rows[0]
        cols = {n: [_parse(r[j]) for r in rows[1:]] for j, n in enumerate(names)}
        return cls(cols, meta, summary)


def read_table(path) -> SweepTable:
    return SweepTable.from_csv(Path(path).read_text(encoding="utf-8"))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log|y|`` against ``log x``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(np.asarray(x, dtype=float))
        ly = np.log(np.abs(np.asarray(y, dtype=float)))
    if not (np.all(np.isfinite(lx)) and np.all(np.isfinite(ly))):
        return math.nan
    return float(np.polyfit(lx, ly, 1)[0])
