"""Command-line entry point: ``cetsim simulate | plot | validate-calibration``.

Exit codes: 0 success, 1 unexpected failure, 2 config or input-schema
error, 3 calibration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .calibration import CalibrationError, check_constraints, load_calibration, parse_calibration
from .experiment import ConfigError, load_config, run_experiment, write_manifest, write_results, write_traces
from .reports import SchemaMismatch, read_results, write_plots

__all__ = ["main"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CALIBRATION = 0, 1, 2, 3


def _simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_CONFIG
        cfg.seed = args.seed
    try:
        table = load_calibration(cfg.calibration_path)
    except (CalibrationError, OSError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    if cfg.calibration_sha256 is not None and cfg.calibration_sha256 != table.content_hash:
        print(
            f"calibration error: {cfg.calibration_path} hash {table.content_hash} "
            f"does not match manifest {cfg.calibration_sha256}",
            file=sys.stderr,
        )
        return EXIT_CALIBRATION

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, traces = run_experiment(cfg, table, sample_outcomes=args.sample_outcomes)
    write_results(rows, table, out / "results.csv")
    write_manifest(cfg, table, out / "manifest.ini")
    if args.traces:
        write_traces(traces, out / "traces.log")
    print(f"wrote {len(rows)} rows to {out / 'results.csv'}")
    return EXIT_OK


def _plot(args) -> int:
    try:
        rows = read_results(args.input)
    except SchemaMismatch as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = write_plots(rows, args.out)
    except SchemaMismatch as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _validate(args) -> int:
    path = Path(args.path)
    try:
        table = parse_calibration(path.read_text(encoding="utf-8"), str(path))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except CalibrationError as exc:
        print(f"FAIL {exc.constraint}: {exc}")
        print(f"first violated constraint: {exc.constraint}", file=sys.stderr)
        return EXIT_CALIBRATION
    results = check_constraints(table, anchor_checks=not args.structural_only)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.message}")
    first = next((r for r in results if not r.passed), None)
    if first is not None:
        print(f"first violated constraint: {first.name}", file=sys.stderr)
        return EXIT_CALIBRATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cetsim", description="Cloud-edge-terminal multimodal beam-prediction simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the sweeps in a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--sample-outcomes", action="store_true", help="report sampled 0/1 hits instead of expected accuracy")
    s.add_argument("--traces", action="store_true", help="also write per-round event traces")
    s.set_defaults(func=_simulate)

    pl = sub.add_parser("plot", help="render figures and the complexity table from results.csv")
    pl.add_argument("--in", dest="input", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_plot)

    v = sub.add_parser("validate-calibration", help="check a calibration table against its constraints")
    v.add_argument("path")
    v.add_argument("--structural-only", action="store_true", help="skip the anchor and scenario-gap checks")
    v.set_defaults(func=_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
