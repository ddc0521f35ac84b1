"""End-to-end runs: agents for both stations, ingestion, co-location analysis."""

from __future__ import annotations

import logging
import math
import shutil
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from .agent import AgentSummary, Channel, ConnectivityPolicy, ForwardBuffer, run_agent, schedule_ticks
from .analysis import align, build_report, monthly_summary, write_pairs_csv, write_report
from .analysis.align import MaskSpec
from .analysis.report import CorrelationReport
from .clock import SimulatedClock
from .config import ROLES, ChannelSpec, ScenarioConfig
from .ingest import Store, StoreSink
from .records import HourlySpool
from .sensors import RawCsvWriter, ReplayCursor, ReplaySensor, SensorModel, SyntheticSensor, TruthSignalParams, truth_at
from .timeutil import HOUR, format_utc

log = logging.getLogger(__name__)

# the reference station reports over a link that never drops
REFERENCE_POLICY = ConnectivityPolicy()


def hourly_signal_std(params: TruthSignalParams, start, hours: int, schedule, mask: MaskSpec = MaskSpec()) -> float:
    """Population std of the noiseless hourly means over unmasked hours."""
    means = []
    for h in range(hours):
        hour = start + HOUR * h
        if mask.covers(hour):
            continue
        ticks = schedule_ticks(schedule, hour)
        means.append(math.fsum(truth_at(params, t) for t in ticks) / len(ticks))
    return float(np.std(means))


def noise_for_target(signal_std: float, target: float, samples_per_hour: int,
                     reference_hourly_sigma: float = 0.0) -> float:
    """Per-sample noise sigma giving an expected hourly Pearson of ``target``.

    With a noiseless reference this is the relation
    ``target = s / sqrt(s**2 + n**2)`` solved for the hourly noise ``n``,
    scaled up by ``sqrt(samples_per_hour)`` because each hour averages that
    many independent draws.
    """
    if not 0 < target < 1:
        raise ValueError("target correlation must be in (0, 1)")
    s2 = signal_std ** 2
    hourly_var = s2 * s2 / (target ** 2 * (s2 + reference_hourly_sigma ** 2)) - s2
    if hourly_var < 0:
        raise ValueError("target unreachable: reference noise already caps the correlation below it")
    return math.sqrt(hourly_var * samples_per_hour)


def channel_seed(seed: int, role: str, index: int) -> int:
    ss = np.random.SeedSequence([seed, ROLES.index(role), index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def resolve_model(cfg: ScenarioConfig, spec: ChannelSpec, role: str, index: int) -> SensorModel:
    m = spec.candidate if role == "candidate" else spec.reference
    sigma = m.noise_sigma
    if sigma is None:
        sigma = 0.0
        if role == "candidate" and spec.target_pearson is not None:
            s = hourly_signal_std(spec.truth, cfg.start, cfg.hours, cfg.schedule, cfg.mask)
            ref_sigma = spec.reference.noise_sigma or 0.0
            sigma = noise_for_target(
                s, spec.target_pearson, cfg.samples_per_hour,
                ref_sigma / math.sqrt(cfg.samples_per_hour),
            )
    seed = m.rng_seed if m.rng_seed is not None else channel_seed(cfg.seed, role, index)
    return SensorModel(bias=m.bias, noise_sigma=sigma, drift_rate=m.drift_rate, rng_seed=seed)


def build_channels(cfg: ScenarioConfig, role: str) -> list[Channel]:
    station = cfg.station(role)
    out = []
    for i, spec in enumerate(cfg.channels):
        m = spec.candidate if role == "candidate" else spec.reference
        if m.replay:
            backend = ReplaySensor(ReplayCursor.open(cfg.resolve(m.replay)), station, spec.pollutant)
        else:
            backend = SyntheticSensor(station, spec.pollutant, spec.truth,
                                      resolve_model(cfg, spec, role, i), cfg.start)
        out.append(Channel(station, spec.pollutant, backend))
    return out


def role_policy(cfg: ScenarioConfig, role: str) -> ConnectivityPolicy:
    return cfg.link.policy() if role == "candidate" else REFERENCE_POLICY


def run_station(cfg: ScenarioConfig, role: str, sink, clock=None, hours: Optional[int] = None,
                on_sample=None, spool: Optional[HourlySpool] = None) -> AgentSummary:
    clock = clock or SimulatedClock(cfg.start)
    return run_agent(
        build_channels(cfg, role), cfg.schedule, role_policy(cfg, role), clock,
        HOUR * (hours if hours is not None else cfg.hours), sink,
        min_samples_per_hour=cfg.min_samples_per_hour,
        buffer=ForwardBuffer(cfg.link.buffer_capacity),
        on_sample=on_sample,
        spool=spool,
    )


@dataclass
class AnalysisResult:
    report: CorrelationReport
    aligned: list
    monthly: dict  # (role, pollutant) -> {(year, month): MonthStats}


def analyze(cand_records: dict, ref_records: dict, mask: MaskSpec, out_dir=None) -> AnalysisResult:
    """``*_records`` map PollutantKind -> ascending hourly records."""
    aligned = []
    monthly = {}
    for p in sorted(cand_records.keys() & ref_records.keys(), key=lambda k: k.token):
        aligned.append(align(cand_records[p], ref_records[p], mask, pollutant=p))
        monthly[("candidate", p)] = monthly_summary(cand_records[p])
        monthly[("reference", p)] = monthly_summary(ref_records[p])
    report = build_report(aligned, mask)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report(report, out_dir)
        for a in aligned:
            write_pairs_csv(a, out_dir / f"pairs_{a.pollutant.token}.csv")
    return AnalysisResult(report, aligned, monthly)


def records_from_store(store: Store, station: str) -> dict:
    return {p: store.query_all(station, p) for s, p in store.channels() if s == station}


def format_monthly(monthly: dict) -> list[str]:
    lines = []
    for (role, p), months in sorted(monthly.items(), key=lambda kv: (kv[0][1].token, kv[0][0])):
        for (y, m), st in months.items():
            lines.append(f"  {p.label:<6} {role:<9} {y:04d}-{m:02d}  mean={st.mean:9.3f}  max={st.max:9.3f}  n_hours={st.n_hours}")
    return lines


def format_summary(cfg: ScenarioConfig, summaries: dict, result: AnalysisResult) -> str:
    lines = [
        f"start: {format_utc(cfg.start)}",
        f"hours: {cfg.hours}",
        f"samples_per_hour: {cfg.samples_per_hour}",
        f"masked months: {', '.join(cfg.mask.tokens()) or 'none'}",
        "",
        "agents:",
    ]
    for role in ROLES:
        s = summaries[role]
        lines.append(
            f"  {role} ({cfg.station(role)}): raw_samples={s.raw_samples} hourly_records={s.produced} "
            f"sent={s.sent} remaining={s.remaining} dropped={s.dropped} sessions={len(s.sessions)}"
        )
        for (station, p), st in sorted(s.channels.items(), key=lambda kv: kv[0][1].token):
            lines.append(
                f"    {p.token}: raw_samples={st.raw_samples} hourly_records={st.hourly_records} "
                f"missing_hours={st.missing_hours} dropped={st.dropped}"
                + (" exhausted" if st.exhausted else "")
            )
    lines += ["", "pairs:"]
    for a in result.aligned:
        lines.append(f"  {a.pollutant.token}: n_pairs={a.n_pairs} masked_hours={a.masked_hours}")
    lines += ["", "monthly:"]
    lines += format_monthly(result.monthly)
    return "\n".join(lines) + "\n"


@dataclass
class SimulationResult:
    summaries: dict  # role -> AgentSummary
    analysis: AnalysisResult
    out_dir: Path


def simulate(cfg: ScenarioConfig, out_dir=None, store_sync: bool = False, write_raw: bool = False) -> SimulationResult:
    """Run both stations on a simulated clock, ingest into ``<out>/store`` and analyze.

    With ``write_raw`` every raw sample is also written to
    ``raw_<station>.csv`` in the raw-sample CSV schema.
    """
    out_dir = Path(out_dir) if out_dir is not None else cfg.resolve(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store_dir = out_dir / "store"
    if store_dir.exists():
        # stale store from an earlier run would turn every record into a duplicate
        shutil.rmtree(store_dir)
    with Store(store_dir, sync=store_sync) as store:
        summaries = {}
        for role in ROLES:
            sink = StoreSink(store, latency=cfg.link.latency if role == "candidate" else timedelta(0))
            if write_raw:
                with RawCsvWriter(out_dir / f"raw_{cfg.station(role)}.csv") as raw:
                    summaries[role] = run_station(cfg, role, sink, on_sample=raw.write)
            else:
                summaries[role] = run_station(cfg, role, sink)
        result = analyze(
            records_from_store(store, cfg.candidate_station),
            records_from_store(store, cfg.reference_station),
            cfg.mask, out_dir,
        )
    (out_dir / "summary.txt").write_text(format_summary(cfg, summaries, result), encoding="utf-8")
    return SimulationResult(summaries, result, out_dir)
