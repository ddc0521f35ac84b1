from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..records import HourlyRecord


@dataclass(frozen=True)
class MonthStats:
    mean: float
    max: float
    n_hours: int


def monthly_summary(series: Sequence[HourlyRecord]) -> dict[tuple[int, int], MonthStats]:
    """Per UTC calendar month mean/max over present hours; MISSING hours are skipped."""
    groups: dict[tuple[int, int], list[float]] = {}
    for r in series:
        if r.mean_value is None:
            continue
        groups.setdefault((r.bucket_start.year, r.bucket_start.month), []).append(r.mean_value)
    return {
        k: MonthStats(math.fsum(v) / len(v), max(v), len(v))
        for k, v in sorted(groups.items())
    }
