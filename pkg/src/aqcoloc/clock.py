"""Clock abstraction driving the agent loop."""

from __future__ import annotations

import time
from datetime import datetime

from .timeutil import UTC, ensure_utc


class SimulatedClock:
    """Deterministic clock; ``sleep_until`` jumps straight to the target."""

    def __init__(self, start: datetime):
        self._now = ensure_utc(start)

    def now(self) -> datetime:
        return self._now

    def sleep_until(self, t: datetime) -> None:
        if t < self._now:
            raise ValueError(f"simulated clock cannot move backwards ({t} < {self._now})")
        self._now = t


class RealClock:
    def now(self) -> datetime:
        return datetime.now(UTC)

    def sleep_until(self, t: datetime) -> None:
        delay = (t - self.now()).total_seconds()
        if delay > 0:
            time.sleep(delay)
