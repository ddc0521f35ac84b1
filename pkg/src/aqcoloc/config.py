"""Scenario configuration: one TOML document describes a whole run.

See ``docs/config.md`` for the grammar.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .agent import DEFAULT_BUFFER_CAPACITY, DEFAULT_MIN_SAMPLES_PER_HOUR, ConnectivityPolicy, SamplingSchedule
from .analysis.align import MaskSpec
from .sensors import PollutantKind, TruthSignalParams
from .timeutil import is_hour_aligned, parse_month, parse_utc

ROLES = ("candidate", "reference")


class ConfigError(ValueError):
    pass


@dataclass
class ModelSpec:
    """Sensor model for one role of one channel, before seeding."""

    bias: float = 0.0
    noise_sigma: Optional[float] = None  # None: derive from target_pearson (candidate) or 0
    drift_rate: float = 0.0
    rng_seed: Optional[int] = None
    replay: Optional[str] = None


@dataclass
class ChannelSpec:
    pollutant: PollutantKind
    truth: TruthSignalParams
    candidate: ModelSpec = field(default_factory=ModelSpec)
    reference: ModelSpec = field(default_factory=ModelSpec)
    target_pearson: Optional[float] = None


@dataclass
class LinkSpec:
    session_max_minutes: float = 30.0
    reconnect_delay_minutes: float = 0.0
    record_latency_seconds: float = 0.0
    buffer_capacity: int = DEFAULT_BUFFER_CAPACITY
    outages: tuple = ()
    sink: str = "127.0.0.1:7878"

    def policy(self) -> ConnectivityPolicy:
        return ConnectivityPolicy(
            session_max=timedelta(minutes=self.session_max_minutes),
            reconnect_delay=timedelta(minutes=self.reconnect_delay_minutes),
            outages=self.outages,
        )

    @property
    def latency(self) -> timedelta:
        return timedelta(seconds=self.record_latency_seconds)


@dataclass
class ScenarioConfig:
    start: datetime
    weeks: float
    channels: list
    seed: int = 0
    candidate_station: str = "cand-01"
    reference_station: str = "ref-01"
    samples_per_hour: int = 10
    min_samples_per_hour: int = DEFAULT_MIN_SAMPLES_PER_HOUR
    link: LinkSpec = field(default_factory=LinkSpec)
    mask: MaskSpec = field(default_factory=MaskSpec)
    out: str = "out"
    listen: str = "127.0.0.1:7878"
    data_dir: str = "store"
    spool: Optional[str] = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def hours(self) -> int:
        return int(round(self.weeks * 7 * 24))

    @property
    def schedule(self) -> SamplingSchedule:
        return SamplingSchedule(self.samples_per_hour)

    def station(self, role: str) -> str:
        return self.candidate_station if role == "candidate" else self.reference_station

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _take(table: dict, key: str, kind, default, where: str):
    if key not in table:
        return default
    v = table.pop(key)
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
        raise ConfigError(f"{where}{key}: expected {kind.__name__}, got {v!r}")
    return v


def _no_leftovers(table: dict, where: str):
    if table:
        raise ConfigError(f"{where}: unknown keys {sorted(table)}")


def _model(table, where) -> ModelSpec:
    if table is None:
        return ModelSpec()
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    t = dict(table)
    m = ModelSpec(
        bias=_take(t, "bias", float, 0.0, where + "."),
        noise_sigma=_take(t, "noise_sigma", float, None, where + "."),
        drift_rate=_take(t, "drift_rate", float, 0.0, where + "."),
        rng_seed=_take(t, "rng_seed", int, None, where + "."),
        replay=_take(t, "replay", str, None, where + "."),
    )
    _no_leftovers(t, where)
    if m.noise_sigma is not None and m.noise_sigma < 0:
        raise ConfigError(f"{where}.noise_sigma must be >= 0")
    return m


def _channel(table, i) -> ChannelSpec:
    where = f"channel[{i}]"
    t = dict(table)
    try:
        pollutant = PollutantKind.parse(_take(t, "pollutant", str, None, where + "."))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    try:
        truth = TruthSignalParams(
            baseline=_take(t, "baseline", float, 10.0, where + "."),
            diurnal_amplitude=_take(t, "diurnal_amplitude", float, 0.0, where + "."),
            seasonal_amplitude=_take(t, "seasonal_amplitude", float, 0.0, where + "."),
            seasonal_peak_month=_take(t, "seasonal_peak_month", int, 12, where + "."),
            diurnal_peak_hour=_take(t, "diurnal_peak_hour", float, 8.0, where + "."),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    target = _take(t, "target_pearson", float, None, where + ".")
    if target is not None and not 0 < target < 1:
        raise ConfigError(f"{where}.target_pearson must be in (0, 1)")
    spec = ChannelSpec(
        pollutant, truth,
        candidate=_model(t.pop("candidate", None), where + ".candidate"),
        reference=_model(t.pop("reference", None), where + ".reference"),
        target_pearson=target,
    )
    _no_leftovers(t, where)
    return spec


def parse_config(doc: dict, base_dir: Optional[Path] = None) -> ScenarioConfig:
    d = dict(doc)
    try:
        start = parse_utc(_take(d, "start", str, "2022-07-01T00:00:00Z", ""))
    except ValueError as exc:
        raise ConfigError(f"start: {exc}") from None
    if not is_hour_aligned(start):
        raise ConfigError("start must be hour-aligned")
    weeks = _take(d, "weeks", float, 34.0, "")
    if weeks * 7 * 24 < 1:
        raise ConfigError("weeks must cover at least one hour")
    seed = _take(d, "seed", int, 0, "")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    try:
        mask = MaskSpec(tuple(parse_month(m) for m in _take(d, "mask", list, [], "")))
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"mask: {exc}") from None
    out = _take(d, "out", str, "out", "")

    tables = {}
    for name in ("candidate", "reference", "schedule", "link", "service", "agent"):
        v = d.pop(name, {})
        if not isinstance(v, dict):
            raise ConfigError(f"[{name}] must be a table")
        tables[name] = dict(v)
    cand_station = _take(tables["candidate"], "station_id", str, "cand-01", "candidate.")
    ref_station = _take(tables["reference"], "station_id", str, "ref-01", "reference.")
    if cand_station == ref_station:
        raise ConfigError("candidate and reference station ids must differ")
    sch = tables["schedule"]
    sph = _take(sch, "samples_per_hour", int, 10, "schedule.")
    msph = _take(sch, "min_samples_per_hour", int, DEFAULT_MIN_SAMPLES_PER_HOUR, "schedule.")
    if sph < 1 or not 0 <= msph <= sph:
        raise ConfigError("schedule: need samples_per_hour >= 1 and 0 <= min_samples_per_hour <= samples_per_hour")
    lk = tables["link"]
    try:
        outages = tuple(
            (parse_utc(a), parse_utc(b)) for a, b in _take(lk, "outages", list, [], "link.")
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"link.outages: {exc}") from None
    link = LinkSpec(
        session_max_minutes=_take(lk, "session_max_minutes", float, 30.0, "link."),
        reconnect_delay_minutes=_take(lk, "reconnect_delay_minutes", float, 0.0, "link."),
        record_latency_seconds=_take(lk, "record_latency_seconds", float, 0.0, "link."),
        buffer_capacity=_take(lk, "buffer_capacity", int, DEFAULT_BUFFER_CAPACITY, "link."),
        outages=outages,
        sink=_take(lk, "sink", str, "127.0.0.1:7878", "link."),
    )
    try:
        link.policy()
    except ValueError as exc:
        raise ConfigError(f"link: {exc}") from None
    if link.buffer_capacity < 1:
        raise ConfigError("link.buffer_capacity must be positive")
    svc = tables["service"]
    listen = _take(svc, "listen", str, "127.0.0.1:7878", "service.")
    data_dir = _take(svc, "data_dir", str, "store", "service.")
    spool = _take(tables["agent"], "spool", str, None, "agent.")
    for name, t in tables.items():
        _no_leftovers(t, f"[{name}]")

    raw_channels = d.pop("channel", None)
    if not raw_channels or not isinstance(raw_channels, list):
        raise ConfigError("at least one [[channel]] table is required")
    channels = [_channel(c, i) for i, c in enumerate(raw_channels)]
    if len({c.pollutant for c in channels}) != len(channels):
        raise ConfigError("each pollutant may appear in only one [[channel]]")
    _no_leftovers(d, "top level")

    return ScenarioConfig(
        start=start, weeks=weeks, channels=channels, seed=seed,
        candidate_station=cand_station, reference_station=ref_station,
        samples_per_hour=sph, min_samples_per_hour=msph, link=link, mask=mask, out=out,
        listen=listen, data_dir=data_dir, spool=spool,
        base_dir=base_dir or Path.cwd(),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, base_dir=path.resolve().parent)


def loads_config(text: str, base_dir=None) -> ScenarioConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from None
    return parse_config(doc, base_dir=Path(base_dir) if base_dir else None)
