from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from ..records import HourlyRecord
from .stats import LinearFit


@dataclass
class CalibratedSeries:
    values: list  # floats, None where the input was MISSING
    clamped: int


def apply_calibration(series: Sequence[Optional[float]], fit: LinearFit) -> CalibratedSeries:
    """Map each value through the fit; MISSING passes through, negatives clamp to 0."""
    out = []
    clamped = 0
    for v in series:
        if v is None:
            out.append(None)
            continue
        c = fit.slope * v + fit.intercept
        if c < 0.0:
            c = 0.0
            clamped += 1
        out.append(c)
    return CalibratedSeries(out, clamped)


def calibrate_records(records: Sequence[HourlyRecord], fit: LinearFit) -> tuple[list[HourlyRecord], int]:
    cal = apply_calibration([r.mean_value for r in records], fit)
    return [replace(r, mean_value=v) for r, v in zip(records, cal.values)], cal.clamped
