"""Pairing candidate and reference hourly series on a common hour grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from ..records import HourlyRecord
from ..sensors import PollutantKind
from ..timeutil import is_hour_aligned


class DataIntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    months: tuple = ()  # (year, month) pairs, UTC calendar months

    def __post_init__(self):
        months = tuple((int(y), int(m)) for y, m in self.months)
        if len(set(months)) != len(months):
            raise ValueError(f"duplicate masked months in {months}")
        for _, m in months:
            if not 1 <= m <= 12:
                raise ValueError(f"month {m} out of range")
        object.__setattr__(self, "months", tuple(sorted(months)))

    @classmethod
    def parse(cls, text: str) -> "MaskSpec":
        from ..timeutil import parse_month

        tokens = [t for t in (text or "").split(",") if t.strip()]
        return cls(tuple(parse_month(t) for t in tokens))

    def covers(self, t: datetime) -> bool:
        return (t.year, t.month) in self.months

    def tokens(self) -> list[str]:
        return [f"{y:04d}-{m:02d}" for y, m in self.months]


@dataclass
class AlignedSeries:
    pollutant: PollutantKind
    hours: list
    candidate: np.ndarray
    reference: np.ndarray
    masked_hours: int = 0  # complete pairs dropped by the mask
    stats: dict = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return len(self.hours)

    @property
    def pairs(self):
        return list(zip(self.hours, self.candidate.tolist(), self.reference.tolist()))


def _index(series: Iterable[HourlyRecord], side: str) -> dict:
    out = {}
    prev = None
    for r in series:
        h = r.bucket_start
        if not is_hour_aligned(h):
            raise DataIntegrityError(f"{side}: {h} is not hour-aligned")
        if h in out:
            raise DataIntegrityError(f"{side}: duplicate hour {h}")
        if prev is not None and h < prev:
            raise DataIntegrityError(f"{side}: series not ascending at {h}")
        prev = h
        out[h] = r.mean_value
    return out


def align(candidate: Sequence[HourlyRecord], reference: Sequence[HourlyRecord],
          mask: MaskSpec = MaskSpec(), pollutant=None) -> AlignedSeries:
    """Intersect on hours where both sides hold a value, minus masked months."""
    cand = _index(candidate, "candidate")
    ref = _index(reference, "reference")
    if pollutant is None:
        kinds = {r.pollutant for r in list(candidate) + list(reference)}
        if len(kinds) > 1:
            raise DataIntegrityError(f"mixed pollutants {sorted(k.token for k in kinds)}")
        pollutant = kinds.pop() if kinds else None
    else:
        pollutant = PollutantKind.parse(pollutant)

    hours, cv, rv = [], [], []
    masked = 0
    for h in sorted(cand.keys() & ref.keys()):
        c, r = cand[h], ref[h]
        if c is None or r is None:
            continue
        if mask.covers(h):
            masked += 1
            continue
        hours.append(h)
        cv.append(c)
        rv.append(r)
    return AlignedSeries(
        pollutant, hours, np.asarray(cv, dtype=np.float64), np.asarray(rv, dtype=np.float64),
        masked_hours=masked,
        stats={"candidate_hours": len(cand), "reference_hours": len(ref)},
    )
