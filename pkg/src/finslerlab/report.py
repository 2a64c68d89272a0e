"""Measured inequality records shared by the pde, geometry and verify modules."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


@dataclass
class InequalityReport:
    """LHS <= RHS as measured; ``slack = rhs - lhs`` is kept even when negative."""

    tag: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)  # [(h, lhs), ...]
    extras: dict = field(default_factory=dict)
    tolerance: float = 0.0

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def red_flag(self) -> bool:
        return not (self.slack >= -self.tolerance)

    def to_dict(self) -> dict:
        return _clean(
            {
                "tag": self.tag,
                "lhs": float(self.lhs),
                "rhs": float(self.rhs),
                "slack": float(self.slack),
                "tolerance": float(self.tolerance),
                "red_flag": self.red_flag,
                "params": self.params,
                "trace": [list(t) for t in self.trace],
                "extras": self.extras,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    CSV_FIELDS = ("tag", "lhs", "rhs", "slack", "tolerance", "red_flag")

    def csv_row(self) -> dict:
        row = {
            "tag": self.tag,
            "lhs": repr(float(self.lhs)),
            "rhs": repr(float(self.rhs)),
            "slack": repr(float(self.slack)),
            "tolerance": repr(float(self.tolerance)),
            "red_flag": int(self.red_flag),
        }
        for k in sorted(self.params):
            v = self.params[k]
            row[f"param_{k}"] = repr(float(v)) if isinstance(v, float) else str(v)
        return row


def reports_to_csv(reports) -> str:
    rows = [r.csv_row() for r in reports]
    keys = list(InequalityReport.CSV_FIELDS)
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
