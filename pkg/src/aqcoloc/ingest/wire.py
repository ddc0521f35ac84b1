"""Line-delimited JSON wire format for hourly records.

One record per line::

    {"v":1,"station":"ncc-01","pollutant":"no2","hour":"2022-11-01T14:00:00Z","mean":41.2,"n":10}

``mean`` is ``null`` for a MISSING hour. The service answers each line with
``ok``, ``dup`` or ``err:<code>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Optional

from ..records import HourlyRecord
from ..sensors import PollutantKind
from ..timeutil import format_utc, is_hour_aligned, parse_utc

SCHEMA_VERSION = 1

# error codes, also the suffix of ``err:<code>`` replies
E_SYNTAX = "syntax"
E_SCHEMA = "schema"
E_VERSION = "version"
E_POLLUTANT = "pollutant"
E_TIMESTAMP = "timestamp"
E_ALIGNMENT = "alignment"
E_N_SAMPLES = "n_samples"
E_VALUE = "value"
E_STORAGE = "storage"

_FIELDS = {"v", "station", "pollutant", "hour", "mean", "n"}


class WireError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class WireRecord:
    schema_version: int
    station_id: str
    pollutant: PollutantKind
    bucket_start: datetime
    mean_value: Optional[float]
    n_samples: int

    @classmethod
    def from_hourly(cls, r: HourlyRecord) -> "WireRecord":
        return cls(SCHEMA_VERSION, r.station_id, r.pollutant, r.bucket_start, r.mean_value, r.n_samples)

    def to_hourly(self) -> HourlyRecord:
        return HourlyRecord(self.station_id, self.pollutant, self.bucket_start, self.mean_value, self.n_samples)

    @property
    def key(self):
        return (self.station_id, self.pollutant, self.bucket_start)


def serialize(record) -> bytes:
    """Encode a WireRecord or HourlyRecord as one newline-terminated line."""
    obj = {
        "v": SCHEMA_VERSION,
        "station": record.station_id,
        "pollutant": record.pollutant.token,
        "hour": format_utc(record.bucket_start),
        "mean": record.mean_value,
        "n": record.n_samples,
    }
    return (json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def _reject_constant(token):
    raise WireError(E_VALUE, f"non-finite number {token}")


def parse_record(line: bytes) -> WireRecord:
    if isinstance(line, str):
        line = line.encode("utf-8")
    try:
        text = line.decode("utf-8").strip()
    except UnicodeDecodeError:
        raise WireError(E_SYNTAX, "line is not UTF-8") from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except WireError:
        raise
    except ValueError as exc:
        raise WireError(E_SYNTAX, str(exc)) from None
    if not isinstance(obj, dict):
        raise WireError(E_SYNTAX, "record must be a JSON object")
    if set(obj) != _FIELDS:
        raise WireError(E_SCHEMA, f"fields {sorted(obj)} != {sorted(_FIELDS)}")

    v = obj["v"]
    if type(v) is not int:
        raise WireError(E_SCHEMA, "v must be an integer")
    if v != SCHEMA_VERSION:
        raise WireError(E_VERSION, f"unsupported schema version {v}")
    station = obj["station"]
    if not isinstance(station, str) or not station:
        raise WireError(E_SCHEMA, "station must be a non-empty string")
    try:
        pollutant = PollutantKind.parse(obj["pollutant"])
    except (ValueError, TypeError):
        raise WireError(E_POLLUTANT, f"unknown pollutant {obj['pollutant']!r}") from None
    try:
        hour = parse_utc(obj["hour"])
    except ValueError as exc:
        raise WireError(E_TIMESTAMP, str(exc)) from None
    if not is_hour_aligned(hour):
        raise WireError(E_ALIGNMENT, f"{obj['hour']} is not hour-aligned")
    n = obj["n"]
    if type(n) is not int:
        raise WireError(E_SCHEMA, "n must be an integer")
    if n < 0:
        raise WireError(E_N_SAMPLES, f"negative n_samples {n}")
    mean = obj["mean"]
    if mean is not None:
        if isinstance(mean, bool) or not isinstance(mean, (int, float)):
            raise WireError(E_SCHEMA, "mean must be a number or null")
        mean = float(mean)
        if not math.isfinite(mean):
            raise WireError(E_VALUE, "mean is not finite")
    return WireRecord(v, station, pollutant, hour, mean, n)
