"""Table-style co-location report, JSON sidecar and plot-ready pair files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..sensors import PollutantKind
from ..timeutil import HOUR, format_utc
from .align import AlignedSeries, MaskSpec
from .stats import (
    DegenerateFitError,
    InsufficientDataError,
    LinearFit,
    UndefinedCorrelationError,
    fit_linear_calibration,
    pearson,
    spearman,
)

ROW_ORDER = (PollutantKind.PM2_5, PollutantKind.PM10, PollutantKind.NO2)
COLUMNS = ("Pollution Type", "Pearson's R", "Spearman's", "n_pairs", "slope", "intercept")


@dataclass
class ChannelResult:
    pollutant: PollutantKind
    n_pairs: int
    masked_hours: int = 0
    pearson_r: Optional[float] = None
    spearman_rho: Optional[float] = None
    calibration: Optional[LinearFit] = None
    reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.reason is None


@dataclass
class CorrelationReport:
    channels: dict = field(default_factory=dict)  # PollutantKind -> ChannelResult
    masked_months: list = field(default_factory=list)
    span: Optional[tuple] = None  # (first hour, end exclusive)

    @property
    def complete(self) -> bool:
        return bool(self.channels) and all(c.ok for c in self.channels.values())

    def ordered(self) -> list[ChannelResult]:
        return [self.channels[p] for p in ROW_ORDER if p in self.channels]


def analyze_channel(aligned: AlignedSeries) -> ChannelResult:
    res = ChannelResult(aligned.pollutant, aligned.n_pairs, aligned.masked_hours)
    try:
        res.pearson_r = pearson(aligned)
        res.spearman_rho = spearman(aligned)
        res.calibration = fit_linear_calibration(aligned)
    except (InsufficientDataError, UndefinedCorrelationError, DegenerateFitError) as exc:
        res.pearson_r = res.spearman_rho = res.calibration = None
        res.reason = f"{type(exc).__name__}: {exc}"
    return res


def build_report(channels: Iterable[AlignedSeries], mask: MaskSpec = MaskSpec()) -> CorrelationReport:
    report = CorrelationReport(masked_months=mask.tokens())
    first = last = None
    for aligned in channels:
        if aligned.pollutant in report.channels:
            raise ValueError(f"pollutant {aligned.pollutant.token} given twice")
        report.channels[aligned.pollutant] = analyze_channel(aligned)
        if aligned.hours:
            first = aligned.hours[0] if first is None else min(first, aligned.hours[0])
            last = aligned.hours[-1] if last is None else max(last, aligned.hours[-1])
    if first is not None:
        report.span = (first, last + HOUR)
    return report


def render_text(report: CorrelationReport) -> str:
    rows = [COLUMNS]
    notes = []
    for c in report.ordered():
        if c.ok:
            rows.append((
                c.pollutant.label, f"{c.pearson_r:.2f}", f"{c.spearman_rho:.2f}", str(c.n_pairs),
                f"{c.calibration.slope:.4f}", f"{c.calibration.intercept:.4f}",
            ))
        else:
            rows.append((c.pollutant.label, "N/A", "N/A", str(c.n_pairs), "N/A", "N/A"))
            notes.append(f"{c.pollutant.label}: {c.reason}")
    widths = [max(len(r[i]) for r in rows) for i in range(len(COLUMNS))]
    lines = ["Co-location statistics: candidate vs reference"]
    if report.span:
        lines.append(f"span: {format_utc(report.span[0])} .. {format_utc(report.span[1])}")
    lines.append("masked months: " + (", ".join(report.masked_months) or "none"))
    lines.append("")
    for i, r in enumerate(rows):
        lines.append(" | ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    if notes:
        lines.append("")
        lines.extend(notes)
    return "\n".join(lines) + "\n"


def report_to_dict(report: CorrelationReport) -> dict:
    chans = []
    for c in report.ordered():
        entry = {
            "pollutant": c.pollutant.token,
            "label": c.pollutant.label,
            "status": "ok" if c.ok else "n/a",
            "n_pairs": c.n_pairs,
            "masked_hours": c.masked_hours,
        }
        if c.ok:
            entry.update(
                pearson_r=c.pearson_r,
                spearman_rho=c.spearman_rho,
                calibration={
                    "slope": c.calibration.slope,
                    "intercept": c.calibration.intercept,
                    "r_squared": c.calibration.r_squared,
                },
            )
        else:
            entry["reason"] = c.reason
        chans.append(entry)
    return {
        "masked_months": list(report.masked_months),
        "span": None if report.span is None else {
            "start": format_utc(report.span[0]), "end": format_utc(report.span[1]),
        },
        "channels": chans,
    }


def write_report(report: CorrelationReport, out_dir) -> None:
    out_dir = Path(out_dir)
    (out_dir / "report.txt").write_text(render_text(report), encoding="utf-8")
    (out_dir / "report.json").write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def write_pairs_csv(aligned: AlignedSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("bucket_start_utc", "candidate_ugm3", "reference_ugm3"))
        for h, c, r in zip(aligned.hours, aligned.candidate.tolist(), aligned.reference.tolist()):
            w.writerow((format_utc(h), repr(c), repr(r)))
