"""Command-line entry point: ``aqcoloc simulate|agent|serve|analyze``."""

from __future__ import annotations

import argparse
import errno
import logging
import shutil
import sys
from datetime import timedelta
from pathlib import Path

from .analysis.align import DataIntegrityError, MaskSpec
from .config import ROLES, ConfigError, ScenarioConfig, load_config
from .ingest import IngestServer, Store, StoreError, TcpSink, parse_address
from .records import HourlySpool, read_hourly_csv
from .sensors import ReplayParseError

log = logging.getLogger("aqcoloc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ANALYSIS = 4

OUTPUT_NAMES = ("report.txt", "report.json", "summary.txt")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(args) -> ScenarioConfig:
    if not args.config:
        raise CliError(EXIT_CONFIG, "--config is required")
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        raise CliError(EXIT_CONFIG, f"config not found: {exc.filename}") from None
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from None
    if getattr(args, "seed", None) is not None:
        if not 0 <= args.seed < 2**64:
            raise CliError(EXIT_CONFIG, "--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if getattr(args, "mask", None) is not None:
        cfg.mask = _mask(args.mask)
    if getattr(args, "out", None):
        cfg.out = str(Path(args.out).resolve())
    return cfg


def _mask(text: str) -> MaskSpec:
    try:
        return MaskSpec.parse(text)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"bad --mask: {exc}") from None


def _remove_partial(out_dir: Path, existed: bool) -> None:
    if not existed:
        shutil.rmtree(out_dir, ignore_errors=True)
        return
    for name in OUTPUT_NAMES:
        (out_dir / name).unlink(missing_ok=True)
    for p in out_dir.glob("pairs_*.csv"):
        p.unlink()
    for p in out_dir.glob("raw_*.csv"):
        p.unlink()
    shutil.rmtree(out_dir / "store", ignore_errors=True)


def cmd_simulate(args) -> int:
    from .scenario import simulate

    cfg = _load(args)
    out_dir = cfg.resolve(cfg.out)
    existed = out_dir.exists()
    try:
        res = simulate(cfg, out_dir, write_raw=args.raw)
    except (ConfigError, ValueError) as exc:
        _remove_partial(out_dir, existed)
        raise CliError(EXIT_CONFIG, f"invalid scenario: {exc}") from None
    except OSError as exc:
        _remove_partial(out_dir, existed)
        raise CliError(EXIT_IO, f"I/O error: {exc}") from None
    for role in ROLES:
        s = res.summaries[role]
        print(f"{role}: raw_samples={s.raw_samples} hourly_records={s.produced} "
              f"sent={s.sent} remaining={s.remaining} dropped={s.dropped}")
    for a in res.analysis.aligned:
        print(f"pairs[{a.pollutant.token}]={a.n_pairs}")
    print((out_dir / "report.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK if res.analysis.report.complete else EXIT_ANALYSIS


def cmd_serve(args) -> int:
    if args.config:
        cfg = _load(args)
        listen, data_dir = cfg.listen, cfg.resolve(cfg.data_dir)
    else:
        listen, data_dir = "127.0.0.1:7878", Path("store")
    listen = args.listen or listen
    data_dir = Path(args.data_dir) if args.data_dir else data_dir
    try:
        address = parse_address(listen)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    try:
        store = Store(data_dir)
    except (OSError, StoreError) as exc:
        raise CliError(EXIT_IO, f"store unreadable: {exc}") from None
    try:
        server = IngestServer(address, store)
    except OSError as exc:
        store.close()
        if exc.errno == errno.EADDRINUSE:
            raise CliError(EXIT_IO, f"address in use: {listen}") from None
        raise CliError(EXIT_IO, f"cannot listen on {listen}: {exc}") from None
    host, port = server.address
    print(f"serving on {host}:{port}, data_dir={data_dir}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
    return EXIT_OK


def cmd_agent(args) -> int:
    from .clock import RealClock, SimulatedClock
    from .scenario import run_station

    cfg = _load(args)
    sink = TcpSink(args.sink or cfg.link.sink,
                   latency=cfg.link.latency if args.role == "candidate" else timedelta(0))
    clock = SimulatedClock(cfg.start) if args.clock == "simulated" else RealClock()
    spool = HourlySpool(cfg.resolve(args.spool or cfg.spool)) if (args.spool or cfg.spool) else None
    try:
        summary = run_station(cfg, args.role, sink, clock=clock, hours=args.hours, spool=spool)
    except KeyboardInterrupt:
        return EXIT_OK
    except ReplayParseError as exc:
        raise CliError(EXIT_IO, f"replay file: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"I/O error: {exc}") from None
    finally:
        sink.close()
    print(f"{args.role}: raw_samples={summary.raw_samples} hourly_records={summary.produced} "
          f"sent={summary.sent} remaining={summary.remaining} dropped={summary.dropped}")
    return EXIT_OK


def _read_source(path: Path, station) -> tuple[dict, str]:
    """Hourly records from a store directory or an hourly CSV export."""
    try:
        if path.is_dir():
            with Store(path, sync=False) as store:
                stations = store.stations()
                if station is None:
                    if len(stations) != 1:
                        raise CliError(EXIT_IO, f"{path}: holds stations {stations}; pick one with --*-station")
                    station = stations[0]
                elif station not in stations:
                    raise CliError(EXIT_IO, f"{path}: no station {station!r} (have {stations})")
                return {p: store.query_all(station, p) for s, p in store.channels() if s == station}, station
        records = list(read_hourly_csv(path))
    except (OSError, StoreError, ValueError) as exc:
        if isinstance(exc, CliError):
            raise
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    stations = sorted({r.station_id for r in records})
    if station is None:
        if len(stations) > 1:
            raise CliError(EXIT_IO, f"{path}: holds stations {stations}; pick one with --*-station")
        station = stations[0] if stations else ""
    out: dict = {}
    for r in sorted((r for r in records if r.station_id == station), key=lambda r: r.bucket_start):
        out.setdefault(r.pollutant, []).append(r)
    return out, station


def cmd_analyze(args) -> int:
    from .scenario import analyze

    mask = MaskSpec()
    if args.config:
        mask = _load(args).mask
    if args.mask is not None:
        mask = _mask(args.mask)
    cand, _ = _read_source(Path(args.candidate), args.candidate_station)
    ref, _ = _read_source(Path(args.reference), args.reference_station)
    out_dir = Path(args.out or "out")
    try:
        res = analyze(cand, ref, mask, out_dir)
    except DataIntegrityError as exc:
        raise CliError(EXIT_ANALYSIS, f"data integrity: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"I/O error: {exc}") from None
    print((out_dir / "report.txt").read_text(encoding="utf-8"), end="")
    if not res.report.complete:
        print("analysis preconditions not met for some channels", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aqcoloc", description="Low-cost sensor co-location pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run both stations on a simulated clock and report")
    s.add_argument("--config", required=True)
    s.add_argument("--mask", help="months to exclude, e.g. 2023-01,2023-02")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--raw", action="store_true", help="also write raw_<station>.csv")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("agent", help="run one station's agent against a remote sink")
    a.add_argument("--config", required=True)
    a.add_argument("--seed", type=int)
    a.add_argument("--role", choices=ROLES, default="candidate")
    a.add_argument("--clock", choices=("real", "simulated"), default="real")
    a.add_argument("--hours", type=int, help="hours to run (default: the config's span)")
    a.add_argument("--sink", help="host:port, overrides link.sink")
    a.add_argument("--spool", help="hourly spool CSV path")
    a.set_defaults(func=cmd_agent)

    v = sub.add_parser("serve", help="run the ingestion service")
    v.add_argument("--config")
    v.add_argument("--listen", help="host:port")
    v.add_argument("--data-dir")
    v.set_defaults(func=cmd_serve)

    z = sub.add_parser("analyze", help="co-location report from two stores or hourly CSVs")
    z.add_argument("--candidate", required=True, help="store directory or hourly CSV")
    z.add_argument("--reference", required=True, help="store directory or hourly CSV")
    z.add_argument("--candidate-station")
    z.add_argument("--reference-station")
    z.add_argument("--config")
    z.add_argument("--mask")
    z.add_argument("--out")
    z.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"aqcoloc: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
