"""Edge agent: hourly sampling schedule, store-and-forward buffer, uplink.

The agent loop samples every channel on each scheduled tick, closes the
hour into an :class:`HourlyRecord`, queues it, and then opens at most one
uplink session per hour boundary.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Optional, Protocol, Sequence

from .records import HourlyRecord, HourlySpool
from .sensors import PollutantKind, RawSample
from .timeutil import HOUR, ensure_utc, floor_hour, is_hour_aligned

log = logging.getLogger(__name__)

DEFAULT_MIN_SAMPLES_PER_HOUR = 5
DEFAULT_BUFFER_CAPACITY = 8760

ACK_OK = "ok"
ACK_DUP = "dup"


class SamplingSchedule:
    """Within-hour sample offsets; evenly spaced by default (0, 6, ..., 54 min)."""

    def __init__(self, samples_per_hour: int = 10, offsets: Optional[Sequence[timedelta]] = None):
        if samples_per_hour < 1:
            raise ValueError("samples_per_hour must be positive")
        if offsets is None:
            step = HOUR / samples_per_hour
            offsets = [step * i for i in range(samples_per_hour)]
        offsets = list(offsets)
        if len(offsets) != samples_per_hour:
            raise ValueError("offsets count must equal samples_per_hour")
        if any(o < timedelta(0) or o >= HOUR for o in offsets):
            raise ValueError("offsets must lie within [0, 60) minutes")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("offsets must be strictly increasing")
        self.samples_per_hour = samples_per_hour
        self.offsets = tuple(offsets)

    def __repr__(self):
        return f"SamplingSchedule(samples_per_hour={self.samples_per_hour})"


def schedule_ticks(schedule: SamplingSchedule, hour_start: datetime) -> list[datetime]:
    hour_start = ensure_utc(hour_start)
    if not is_hour_aligned(hour_start):
        raise ValueError(f"hour_start {hour_start} is not aligned to an exact hour")
    return [hour_start + o for o in schedule.offsets]


@dataclass
class HourAccumulator:
    bucket_start: datetime
    pollutant: PollutantKind
    station_id: str
    samples_per_hour: int = 10
    collected: list = field(default_factory=list)

    def add(self, sample: RawSample) -> None:
        if not self.bucket_start <= sample.timestamp < self.bucket_start + HOUR:
            raise ValueError(f"sample at {sample.timestamp} outside bucket {self.bucket_start}")
        if len(self.collected) >= self.samples_per_hour:
            raise ValueError("accumulator already holds samples_per_hour values")
        self.collected.append(sample.value)


def close_hour(acc: HourAccumulator, min_samples_per_hour: int = DEFAULT_MIN_SAMPLES_PER_HOUR) -> HourlyRecord:
    """Consume the accumulator into a record; MISSING below the threshold."""
    values, acc.collected = acc.collected, []
    n = len(values)
    mean = math.fsum(values) / n if n and n >= min_samples_per_hour else None
    return HourlyRecord(acc.station_id, acc.pollutant, acc.bucket_start, mean, n)


class ForwardBuffer:
    """Bounded FIFO of hourly records awaiting acknowledgment.

    Overflow evicts the oldest record. Operations take a lock so a separate
    transmitter thread may drain the queue.
    """

    def __init__(self, capacity: int = DEFAULT_BUFFER_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._q: deque[HourlyRecord] = deque()
        self._lock = threading.Lock()
        self.dropped = 0
        self.dropped_by_channel: Counter = Counter()
        self.enqueued = 0

    def __len__(self):
        return len(self._q)

    def enqueue(self, record: HourlyRecord) -> None:
        with self._lock:
            if len(self._q) >= self.capacity:
                old = self._q.popleft()
                self.dropped += 1
                self.dropped_by_channel[(old.station_id, old.pollutant)] += 1
            self._q.append(record)
            self.enqueued += 1

    def peek(self) -> Optional[HourlyRecord]:
        with self._lock:
            return self._q[0] if self._q else None

    def acknowledge(self, record: HourlyRecord) -> None:
        """Remove ``record`` from the head once the sink has acknowledged it."""
        with self._lock:
            # head may have been evicted while the send was in flight
            if self._q and self._q[0] is record:
                self._q.popleft()

    def snapshot(self) -> list[HourlyRecord]:
        with self._lock:
            return list(self._q)


@dataclass(frozen=True)
class ConnectivityPolicy:
    session_max: timedelta = timedelta(minutes=30)
    reconnect_delay: timedelta = timedelta(0)
    outages: tuple = ()  # [start, end) UTC pairs

    def __post_init__(self):
        if self.session_max <= timedelta(0):
            raise ValueError("session_max must be positive")
        if self.reconnect_delay < timedelta(0):
            raise ValueError("reconnect_delay must be >= 0")
        norm = []
        for start, end in self.outages:
            start, end = ensure_utc(start), ensure_utc(end)
            if end <= start:
                raise ValueError(f"empty outage window [{start}, {end})")
            norm.append((start, end))
        object.__setattr__(self, "outages", tuple(sorted(norm)))

    def in_outage(self, t: datetime) -> bool:
        return any(s <= t < e for s, e in self.outages)


class Sink(Protocol):
    """Ingestion endpoint. ``send`` returns ``ok``, ``dup`` or ``err:<code>``
    and raises ``OSError`` when unreachable. ``latency`` is the simulated
    session time one record consumes."""

    latency: timedelta

    def send(self, record: HourlyRecord) -> str: ...


@dataclass
class SessionTrace:
    start: datetime
    end: datetime
    sent: int
    ended_by: str  # drained | session_max | outage | unreachable | rejected

    @property
    def duration(self) -> timedelta:
        return self.end - self.start


@dataclass
class TransmitOutcome:
    sent: int
    remaining: int
    dropped_total: int
    session: Optional[SessionTrace] = None


def transmit_pending(buffer: ForwardBuffer, policy: ConnectivityPolicy, now: datetime, sink: Sink) -> TransmitOutcome:
    """Run one uplink session starting at ``now``.

    Records go out in FIFO order and are removed only once acknowledged.
    The session stops at the first outage instant, at ``session_max``, on an
    unreachable sink or on a rejected record; whatever is left stays queued.
    """
    latency = getattr(sink, "latency", timedelta(0))
    t = now
    sent = 0
    ended_by = "drained"
    while (record := buffer.peek()) is not None:
        if policy.in_outage(t):
            ended_by = "outage"
            break
        if t + latency - now > policy.session_max:
            ended_by = "session_max"
            break
        try:
            reply = sink.send(record)
        except OSError as exc:
            log.debug("sink unreachable: %s", exc)
            ended_by = "unreachable"
            break
        if reply not in (ACK_OK, ACK_DUP):
            log.warning("sink rejected %s: %s", record.key, reply)
            ended_by = "rejected"
            break
        buffer.acknowledge(record)
        sent += 1
        t += latency
    return TransmitOutcome(sent, len(buffer), buffer.dropped, SessionTrace(now, t, sent, ended_by))


class Uplink:
    """Tracks session history and enforces the reconnect delay between sessions."""

    def __init__(self, policy: ConnectivityPolicy, sink: Sink):
        self.policy = policy
        self.sink = sink
        self.sessions: list[SessionTrace] = []
        self.next_allowed: Optional[datetime] = None
        self.sent = 0

    def attempt(self, buffer: ForwardBuffer, now: datetime) -> Optional[TransmitOutcome]:
        if not len(buffer):
            return None
        if self.next_allowed is not None and now < self.next_allowed:
            return None
        out = transmit_pending(buffer, self.policy, now, self.sink)
        s = out.session
        self.sessions.append(s)
        self.sent += out.sent
        self.next_allowed = s.end
        if s.ended_by == "session_max":
            self.next_allowed += self.policy.reconnect_delay
        return out


class Backend(Protocol):
    def read(self, t: datetime) -> Optional[RawSample]: ...


@dataclass
class Channel:
    station_id: str
    pollutant: PollutantKind
    backend: Backend

    def __post_init__(self):
        self.pollutant = PollutantKind.parse(self.pollutant)


@dataclass
class ChannelStats:
    raw_samples: int = 0
    hourly_records: int = 0
    missing_hours: int = 0
    dropped: int = 0
    exhausted: bool = False


@dataclass
class AgentSummary:
    channels: dict  # (station_id, pollutant) -> ChannelStats
    hours: int
    produced: int
    sent: int
    remaining: int
    dropped: int
    sessions: list

    @property
    def raw_samples(self) -> int:
        return sum(c.raw_samples for c in self.channels.values())


def run_agent(
    channels: Sequence[Channel],
    schedule: SamplingSchedule,
    policy: ConnectivityPolicy,
    clock,
    duration: timedelta,
    sink: Sink,
    *,
    min_samples_per_hour: int = DEFAULT_MIN_SAMPLES_PER_HOUR,
    buffer: Optional[ForwardBuffer] = None,
    spool: Optional[HourlySpool] = None,
    on_sample: Optional[Callable[[RawSample], None]] = None,
    on_record: Optional[Callable[[HourlyRecord], None]] = None,
) -> AgentSummary:
    """Sample, aggregate and forward for ``duration`` whole hours.

    Sampling starts at the clock's current hour if it is aligned, otherwise
    at the next hour boundary.
    """
    n_hours = duration // HOUR
    if n_hours < 1:
        raise ValueError("duration must be at least one hour")
    if buffer is None:
        buffer = ForwardBuffer()
    uplink = Uplink(policy, sink)
    stats = {(c.station_id, c.pollutant): ChannelStats() for c in channels}
    if len(stats) != len(channels):
        raise ValueError("duplicate (station, pollutant) channel")

    now = clock.now()
    start = now if is_hour_aligned(now) else floor_hour(now) + HOUR
    produced = 0
    for h in range(n_hours):
        hour_start = start + HOUR * h
        accs = [
            HourAccumulator(hour_start, c.pollutant, c.station_id, schedule.samples_per_hour)
            for c in channels
        ]
        for tick in schedule_ticks(schedule, hour_start):
            clock.sleep_until(tick)
            for c, acc in zip(channels, accs):
                st = stats[(c.station_id, c.pollutant)]
                if st.exhausted:
                    continue
                sample = c.backend.read(tick)
                if sample is None:
                    log.info("backend for %s/%s exhausted at %s", c.station_id, c.pollutant.token, tick)
                    st.exhausted = True
                    continue
                acc.add(sample)
                st.raw_samples += 1
                if on_sample is not None:
                    on_sample(sample)
        hour_end = hour_start + HOUR
        clock.sleep_until(hour_end)
        for c, acc in zip(channels, accs):
            record = close_hour(acc, min_samples_per_hour)
            st = stats[(c.station_id, c.pollutant)]
            st.hourly_records += 1
            st.missing_hours += record.missing
            produced += 1
            if spool is not None:
                spool.append(record)
            if on_record is not None:
                on_record(record)
            buffer.enqueue(record)
        uplink.attempt(buffer, hour_end)

    for key, st in stats.items():
        st.dropped = buffer.dropped_by_channel.get(key, 0)
    return AgentSummary(
        channels=stats,
        hours=n_hours,
        produced=produced,
        sent=uplink.sent,
        remaining=len(buffer),
        dropped=buffer.dropped,
        sessions=uplink.sessions,
    )
