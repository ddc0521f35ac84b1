"""UTC instant helpers shared by every stage of the pipeline."""

from __future__ import annotations

import calendar
from datetime import datetime, timedelta, timezone

UTC = timezone.utc
HOUR = timedelta(hours=1)
DAY = timedelta(days=1)


def utc(year, month, day, hour=0, minute=0, second=0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=UTC)


def parse_utc(text: str) -> datetime:
    """Parse an RFC 3339 timestamp that carries an explicit UTC designation.

    Accepts a trailing ``Z`` or ``+00:00``; naive or non-UTC offsets raise
    ``ValueError``.
    """
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    s = text.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    elif not s.endswith("+00:00"):
        raise ValueError(f"timestamp {text!r} lacks an explicit UTC designation")
    if len(s) < 19 or s[10] not in "Tt":
        raise ValueError(f"timestamp {text!r} is not RFC 3339")
    try:
        dt = datetime.fromisoformat(s[:10] + "T" + s[11:])
    except ValueError as exc:
        raise ValueError(f"timestamp {text!r} is not RFC 3339") from exc
    return dt.astimezone(UTC)


def format_utc(dt: datetime) -> str:
    """Second-resolution RFC 3339 with a ``Z`` suffix."""
    return ensure_utc(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


def ensure_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None or dt.utcoffset() is None:
        raise ValueError(f"instant {dt!r} is naive; UTC designation required")
    if dt.utcoffset() != timedelta(0):
        return dt.astimezone(UTC)
    return dt


def is_hour_aligned(dt: datetime) -> bool:
    return dt.minute == 0 and dt.second == 0 and dt.microsecond == 0


def floor_hour(dt: datetime) -> datetime:
    return dt.replace(minute=0, second=0, microsecond=0)


def hour_range(start: datetime, stop: datetime):
    """Yield hour instants in ``[start, stop)``."""
    t = start
    while t < stop:
        yield t
        t += HOUR


def days_in_month(year: int, month: int) -> int:
    return calendar.monthrange(year, month)[1]


def parse_month(token: str) -> tuple[int, int]:
    """``'2023-01'`` -> ``(2023, 1)``."""
    try:
        year_s, month_s = token.strip().split("-")
        year, month = int(year_s), int(month_s)
    except ValueError as exc:
        raise ValueError(f"bad month token {token!r}, expected YYYY-MM") from exc
    if not 1 <= month <= 12:
        raise ValueError(f"bad month token {token!r}, month out of range")
    return year, month
