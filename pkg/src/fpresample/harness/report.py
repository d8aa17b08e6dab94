"""Tabular study results and their CSV / JSON renderings."""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class IndicatorReport:
    """A rows-by-columns table of study results.

    ``rows`` maps an indicator name (CP, LE, SE(CP), ...) to one value per
    column; ``None`` marks an empty cell. ``counts`` keeps the integer
    tallies behind the rates so that identities such as CP + LE + RE = 1
    can be checked exactly. ``meta`` holds scalar diagnostics.
    """

    scenario: str
    study: str
    column_label: str
    columns: Tuple
    rows: Dict[str, Tuple[Optional[float], ...]]
    reps: int = 0
    counts: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def row(self, name) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self.rows[name]], dtype=float)

    def value(self, name, column):
        return self.rows[name][list(self.columns).index(column)]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "study": self.study,
            "column_label": self.column_label,
            "columns": [_plain(c) for c in self.columns],
            "rows": {k: [_plain(v) for v in vals] for k, vals in self.rows.items()},
            "counts": {k: list(map(int, v)) for k, v in self.counts.items()},
            "reps": self.reps,
            "meta": {k: _plain(v) for k, v in self.meta.items()},
        }


def _plain(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


def fmt(v) -> str:
    """Shortest round-trip decimal text; empty for missing values."""
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(reports: Sequence[IndicatorReport]) -> str:
    """One block per report: a header row (scenario, indicator, columns...)
    followed by the indicator rows. Blocks are separated by a blank line."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for i, rep in enumerate(reports):
        if i:
            buf.write("\n")
        writer.writerow(["scenario", rep.column_label, *map(fmt, rep.columns)])
        for name, vals in rep.rows.items():
            writer.writerow([rep.scenario, name, *map(fmt, vals)])
    return buf.getvalue()


def to_json(reports: Sequence[IndicatorReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, allow_nan=False) + "\n"


def render(reports: Sequence[IndicatorReport], fmt_name: str = "csv") -> str:
    return to_json(reports) if fmt_name == "json" else to_csv(reports)
