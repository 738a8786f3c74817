"""CSV output with a metadata comment line.

Floats are written with ``repr`` so a rerun with the same configuration
reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


@dataclass
class ExperimentReport:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(x) for x in v)
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, Path):
        return str(v)
    return v


def render(report: ExperimentReport) -> str:
    meta = {"version": __version__, **_jsonable(report.meta)}
    lines = ["# meta: " + json.dumps(meta, sort_keys=True, separators=(",", ":"))]
    lines.append(",".join(report.columns))
    lines += [",".join(_cell(v) for v in row) for row in report.rows]
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, path) -> None:
    """Write ``report``; ``path`` of ``None`` or ``-`` means standard output."""
    text = render(report)
    if path is None or str(path) == "-":
        import sys
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
