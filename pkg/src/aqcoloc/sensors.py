"""Pollutant channels and sensor backends.

Two backends stand in for the physical PM and NO2 sensors: a seeded
synthetic model (truth signal plus bias, linear drift and Gaussian noise)
and a replay cursor over recorded raw-sample CSV.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Optional, TextIO

import numpy as np

from .timeutil import DAY, UTC, days_in_month, ensure_utc, format_utc, parse_utc

RAW_CSV_HEADER = ("station_id", "pollutant", "timestamp_utc", "value_ugm3")

DIURNAL_PERIOD = timedelta(hours=24)
SEASONAL_PERIOD = timedelta(days=365.25)


class PollutantKind(enum.Enum):
    PM2_5 = "pm2_5"
    PM10 = "pm10"
    NO2 = "no2"

    @property
    def token(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, token: str) -> "PollutantKind":
        if isinstance(token, cls):
            return token
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown pollutant token {token!r}") from None


_LABELS = {
    PollutantKind.PM2_5: "PM2.5",
    PollutantKind.PM10: "PM10",
    PollutantKind.NO2: "NO2",
}


@dataclass(frozen=True)
class RawSample:
    station_id: str
    pollutant: PollutantKind
    timestamp: datetime
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"sample value must be finite, got {self.value!r}")
        object.__setattr__(self, "timestamp", ensure_utc(self.timestamp))


@dataclass(frozen=True)
class TruthSignalParams:
    """Diurnal plus seasonal sinusoid around a baseline, in µg/m³.

    The diurnal term peaks at ``diurnal_peak_hour`` UTC each day. The
    seasonal term peaks at the midpoint of ``seasonal_peak_month`` each year.
    """

    baseline: float
    diurnal_amplitude: float = 0.0
    seasonal_amplitude: float = 0.0
    seasonal_peak_month: int = 12
    diurnal_peak_hour: float = 8.0

    def __post_init__(self):
        if self.diurnal_amplitude < 0 or self.seasonal_amplitude < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.baseline - self.diurnal_amplitude - self.seasonal_amplitude < 0:
            raise ValueError(
                "baseline - diurnal_amplitude - seasonal_amplitude must be >= 0"
            )
        if not 1 <= self.seasonal_peak_month <= 12:
            raise ValueError("seasonal_peak_month must be in 1..12")
        if not 0 <= self.diurnal_peak_hour < 24:
            raise ValueError("diurnal_peak_hour must be in [0, 24)")


@dataclass(frozen=True)
class SensorModel:
    bias: float = 0.0
    noise_sigma: float = 0.0
    drift_rate: float = 0.0  # µg/m³ per day since deployment start
    rng_seed: int = 0

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")


def seasonal_peak(month: int, year: int) -> datetime:
    """Instant at which the seasonal term of ``month`` peaks in ``year``."""
    start = datetime(year, month, 1, tzinfo=UTC)
    return start + DAY * days_in_month(year, month) / 2


def _seasonal_phase(t: datetime, month: int) -> float:
    # Distance to the nearest yearly anchor; cos is even, so the switch
    # between anchors is continuous.
    best = None
    for year in (t.year - 1, t.year, t.year + 1):
        d = (t - seasonal_peak(month, year)) / SEASONAL_PERIOD
        if best is None or abs(d) < abs(best):
            best = d
    return best


def truth_at(params: TruthSignalParams, t: datetime) -> float:
    t = ensure_utc(t)
    value = params.baseline
    if params.diurnal_amplitude:
        midnight = t.replace(hour=0, minute=0, second=0, microsecond=0)
        hours = (t - midnight) / timedelta(hours=1)
        value += params.diurnal_amplitude * math.cos(
            2.0 * math.pi * (hours - params.diurnal_peak_hour) / 24.0
        )
    if params.seasonal_amplitude:
        phase = _seasonal_phase(t, params.seasonal_peak_month)
        value += params.seasonal_amplitude * math.cos(2.0 * math.pi * phase)
    return max(value, 0.0)


def sample_synthetic(
    model: SensorModel,
    params: TruthSignalParams,
    t: datetime,
    deployment_start: datetime,
    rng: np.random.Generator,
    station_id: str,
    pollutant: PollutantKind,
) -> RawSample:
    """One reading: truth + bias + drift + N(0, noise_sigma) from ``rng``.

    A standard normal is drawn on every call, so the stream position does
    not depend on ``noise_sigma``.
    """
    t = ensure_utc(t)
    if t < ensure_utc(deployment_start):
        raise ValueError(f"sample time {t} precedes deployment start {deployment_start}")
    elapsed_days = (t - deployment_start) / DAY
    z = float(rng.standard_normal())
    value = truth_at(params, t) + model.bias + model.drift_rate * elapsed_days
    value += model.noise_sigma * z
    return RawSample(station_id, pollutant, t, value)


@dataclass
class SyntheticSensor:
    """Stateful synthetic backend owning its seeded noise stream."""

    station_id: str
    pollutant: PollutantKind
    params: TruthSignalParams
    model: SensorModel
    deployment_start: datetime
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.pollutant = PollutantKind.parse(self.pollutant)
        self.rng = np.random.default_rng(self.model.rng_seed)

    def read(self, t: datetime) -> RawSample:
        return sample_synthetic(
            self.model, self.params, t, self.deployment_start, self.rng,
            self.station_id, self.pollutant,
        )


class ReplayParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_raw_row(row: list[str], line: int) -> RawSample:
    if len(row) != 4:
        raise ReplayParseError(line, f"expected 4 fields, got {len(row)}")
    station_id, token, ts, value_s = row
    if not station_id:
        raise ReplayParseError(line, "empty station_id")
    try:
        pollutant = PollutantKind.parse(token)
    except ValueError as exc:
        raise ReplayParseError(line, str(exc)) from None
    try:
        timestamp = parse_utc(ts)
    except ValueError as exc:
        raise ReplayParseError(line, str(exc)) from None
    try:
        value = float(value_s)
    except ValueError:
        raise ReplayParseError(line, f"non-numeric value {value_s!r}") from None
    if not math.isfinite(value):
        raise ReplayParseError(line, f"non-finite value {value_s!r}")
    return RawSample(station_id, pollutant, timestamp, value)


class ReplayCursor:
    """Reads raw samples back from a CSV file in file order.

    Line numbers in errors count data rows from 1; the header line, when
    present, is not counted.
    """

    def __init__(self, stream: TextIO):
        self._reader = csv.reader(stream)
        self._line = 0
        self._first = True
        self.exhausted = False

    @classmethod
    def open(cls, path) -> "ReplayCursor":
        return cls(open(path, newline="", encoding="utf-8"))

    def next(self) -> Optional[RawSample]:
        """Next sample, or ``None`` at end of stream."""
        if self.exhausted:
            return None
        for row in self._reader:
            if self._first:
                self._first = False
                if tuple(row) == RAW_CSV_HEADER:
                    continue
            if not row:
                continue
            self._line += 1
            return parse_raw_row(row, self._line)
        self.exhausted = True
        return None

    def __iter__(self):
        while (sample := self.next()) is not None:
            yield sample


def replay_next(source: ReplayCursor) -> Optional[RawSample]:
    return source.next()


class ReplaySensor:
    """Agent backend that feeds recorded values for one channel.

    Rows for other channels are skipped. Each replayed value is stamped with
    the tick at which the agent asked for it.
    """

    def __init__(self, cursor: ReplayCursor, station_id: str, pollutant):
        self.cursor = cursor
        self.station_id = station_id
        self.pollutant = PollutantKind.parse(pollutant)

    def read(self, t: datetime) -> Optional[RawSample]:
        while (sample := self.cursor.next()) is not None:
            if sample.pollutant is self.pollutant and sample.station_id == self.station_id:
                return RawSample(self.station_id, self.pollutant, ensure_utc(t), sample.value)
        return None


class RawCsvWriter:
    """Streams raw samples to CSV; values keep 4 fractional digits."""

    def __init__(self, path):
        self._fh = open(Path(path), "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(RAW_CSV_HEADER)
        self.count = 0

    def write(self, s: RawSample) -> None:
        self._w.writerow((s.station_id, s.pollutant.token, format_utc(s.timestamp), f"{s.value:.4f}"))
        self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_raw_csv(samples: Iterable[RawSample], path) -> int:
    with RawCsvWriter(path) as w:
        for s in samples:
            w.write(s)
    return w.count
