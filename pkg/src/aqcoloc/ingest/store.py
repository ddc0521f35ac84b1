"""Append-only per-channel log store with an in-memory key index.

Layout: ``<data_dir>/<station_id>/<pollutant>.log``, one wire line per
record. The index is rebuilt by replaying every log on open; a trailing
partial line (torn write) is ignored and truncated away.
"""

from __future__ import annotations

import bisect
import logging
import os
import re
import threading
from datetime import datetime
from pathlib import Path

from ..records import HourlyRecord
from ..sensors import PollutantKind
from ..timeutil import ensure_utc, is_hour_aligned
from .wire import WireError, WireRecord, parse_record, serialize

log = logging.getLogger(__name__)

ACCEPTED = "accepted"
DUPLICATE = "duplicate"

_SAFE_STATION = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class StoreError(OSError):
    pass


class _ChannelLog:
    def __init__(self, path: Path):
        self.path = path
        self.hours: list[datetime] = []
        self.records: dict[datetime, HourlyRecord] = {}
        self.fh = None

    def insert(self, record: HourlyRecord) -> None:
        bisect.insort(self.hours, record.bucket_start)
        self.records[record.bucket_start] = record


class Store:
    """Deduplicating record store.

    ``ingest`` returns :data:`ACCEPTED` for the first write of a key and
    :data:`DUPLICATE` afterwards; it returns only after the line reached
    the log (and ``fsync`` when ``sync`` is true).
    """

    def __init__(self, data_dir, sync: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sync = sync
        self._lock = threading.RLock()
        self._channels: dict[tuple[str, PollutantKind], _ChannelLog] = {}
        self._replay()

    def _replay(self) -> None:
        for station_dir in sorted(p for p in self.data_dir.iterdir() if p.is_dir()):
            for path in sorted(station_dir.glob("*.log")):
                try:
                    pollutant = PollutantKind.parse(path.stem)
                except ValueError:
                    log.warning("ignoring unexpected log file %s", path)
                    continue
                ch = _ChannelLog(path)
                self._channels[(station_dir.name, pollutant)] = ch
                self._load(ch)

    def _load(self, ch: _ChannelLog) -> None:
        data = ch.path.read_bytes()
        good = data.rfind(b"\n") + 1
        if good < len(data):
            log.warning("%s: discarding %d-byte torn tail", ch.path, len(data) - good)
            with open(ch.path, "r+b") as fh:
                fh.truncate(good)
        for lineno, line in enumerate(data[:good].splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = parse_record(line).to_hourly()
            except WireError as exc:
                raise StoreError(f"{ch.path}:{lineno}: corrupt record ({exc})") from None
            if rec.bucket_start not in ch.records:
                ch.insert(rec)

    def _channel(self, station_id: str, pollutant: PollutantKind, create: bool):
        key = (station_id, pollutant)
        ch = self._channels.get(key)
        if ch is None and create:
            if not _SAFE_STATION.match(station_id):
                raise WireError("schema", f"station id {station_id!r} not usable as a directory name")
            d = self.data_dir / station_id
            d.mkdir(exist_ok=True)
            ch = _ChannelLog(d / f"{pollutant.token}.log")
            self._channels[key] = ch
        return ch

    def ingest(self, record) -> str:
        if isinstance(record, HourlyRecord):
            record = WireRecord.from_hourly(record)
        line = serialize(record)
        hourly = record.to_hourly()
        with self._lock:
            ch = self._channel(record.station_id, record.pollutant, create=True)
            if record.bucket_start in ch.records:
                return DUPLICATE
            try:
                if ch.fh is None:
                    ch.fh = open(ch.path, "ab")
                ch.fh.write(line)
                ch.fh.flush()
                if self.sync:
                    os.fsync(ch.fh.fileno())
            except OSError as exc:
                raise StoreError(f"append to {ch.path} failed: {exc}") from exc
            ch.insert(hourly)
            return ACCEPTED

    def query_range(self, station_id: str, pollutant, start: datetime, stop: datetime) -> list[HourlyRecord]:
        """Records with ``start <= bucket_start < stop``, ascending."""
        start, stop = ensure_utc(start), ensure_utc(stop)
        if not (is_hour_aligned(start) and is_hour_aligned(stop)):
            raise ValueError("query bounds must be hour-aligned")
        if start >= stop:
            raise ValueError(f"inverted query range [{start}, {stop})")
        pollutant = PollutantKind.parse(pollutant)
        with self._lock:
            ch = self._channels.get((station_id, pollutant))
            if ch is None:
                return []
            lo = bisect.bisect_left(ch.hours, start)
            hi = bisect.bisect_left(ch.hours, stop)
            return [ch.records[h] for h in ch.hours[lo:hi]]

    def query_all(self, station_id: str, pollutant) -> list[HourlyRecord]:
        pollutant = PollutantKind.parse(pollutant)
        with self._lock:
            ch = self._channels.get((station_id, pollutant))
            if ch is None:
                return []
            return [ch.records[h] for h in ch.hours]

    def channels(self) -> list[tuple[str, PollutantKind]]:
        with self._lock:
            return sorted(self._channels, key=lambda k: (k[0], k[1].token))

    def stations(self) -> list[str]:
        return sorted({s for s, _ in self.channels()})

    def keys(self) -> set:
        with self._lock:
            return {(s, p, h) for (s, p), ch in self._channels.items() for h in ch.hours}

    def __len__(self):
        with self._lock:
            return sum(len(ch.hours) for ch in self._channels.values())

    def close(self) -> None:
        with self._lock:
            for ch in self._channels.values():
                if ch.fh is not None:
                    ch.fh.close()
                    ch.fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def ingest(store: Store, record) -> str:
    return store.ingest(record)


def query_range(store: Store, station_id, pollutant, start, stop) -> list[HourlyRecord]:
    return store.query_range(station_id, pollutant, start, stop)
