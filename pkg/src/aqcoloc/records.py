"""Hourly records: the unit exchanged between agent, service and analysis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .sensors import PollutantKind
from .timeutil import ensure_utc, format_utc, is_hour_aligned, parse_utc

HOURLY_CSV_HEADER = ("station_id", "pollutant", "bucket_start_utc", "mean_value_ugm3", "n_samples")


@dataclass(frozen=True)
class HourlyRecord:
    """Mean concentration for one (station, pollutant, hour) bucket.

    ``mean_value`` is ``None`` for a MISSING hour.
    """

    station_id: str
    pollutant: PollutantKind
    bucket_start: datetime
    mean_value: Optional[float]
    n_samples: int

    def __post_init__(self):
        object.__setattr__(self, "pollutant", PollutantKind.parse(self.pollutant))
        object.__setattr__(self, "bucket_start", ensure_utc(self.bucket_start))
        if not is_hour_aligned(self.bucket_start):
            raise ValueError(f"bucket_start {self.bucket_start} is not hour-aligned")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        if self.mean_value is not None and not math.isfinite(self.mean_value):
            raise ValueError("mean_value must be finite or None")

    @property
    def missing(self) -> bool:
        return self.mean_value is None

    @property
    def key(self) -> tuple[str, PollutantKind, datetime]:
        return (self.station_id, self.pollutant, self.bucket_start)


def write_hourly_csv(records: Iterable[HourlyRecord], path, append: bool = False) -> None:
    path = Path(path)
    fresh = not append or not path.exists() or path.stat().st_size == 0
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(HOURLY_CSV_HEADER)
        for r in records:
            w.writerow((
                r.station_id,
                r.pollutant.token,
                format_utc(r.bucket_start),
                "" if r.mean_value is None else repr(r.mean_value),
                r.n_samples,
            ))


def read_hourly_csv(path) -> Iterator[HourlyRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if tuple(header) != HOURLY_CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                station, token, ts, mean_s, n_s = row
                yield HourlyRecord(
                    station, PollutantKind.parse(token), parse_utc(ts),
                    float(mean_s) if mean_s else None, int(n_s),
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None


class HourlySpool:
    """Append-only CSV of closed hours, kept for crash recovery."""

    def __init__(self, path):
        self.path = Path(path)

    def append(self, record: HourlyRecord) -> None:
        write_hourly_csv([record], self.path, append=True)

    def replay(self) -> list[HourlyRecord]:
        if not self.path.exists():
            return []
        return list(read_hourly_csv(self.path))
