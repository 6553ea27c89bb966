"""Command-line entry point: ``colored-lmmse {mse,scaling}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import ConfigError, LmmseError
from .experiment import (ExperimentConfig, gnuplot_script, load_config,
                         run_mse_experiment, run_scaling_benchmark, write_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("colored_lmmse")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colored-lmmse",
                     description="LMMSE smoothing benchmarks under AR colored noise")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("mse", "MSE versus Es/N0 sweep"),
                        ("scaling", "wall time versus block length")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="JSON or key = value config file")
        p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--filters", help="comma list from block,fg_colored,fg_white")
        p.add_argument("--plot-script", type=Path, help="write a gnuplot script for the CSV")
        p.add_argument("--figure", type=Path, help="render a matplotlib figure to this file")
        p.add_argument("-v", "--verbose", action="store_true")
    sub.choices["mse"].add_argument("--timing", action="store_true",
                                    help="record wall times (CSV no longer reproducible)")
    sub.choices["scaling"].add_argument("--n-grid", help="comma list of block lengths")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.filters:
        overrides["filters"] = tuple(f.strip() for f in args.filters.split(",") if f.strip())
    if getattr(args, "timing", False):
        overrides["record_timing"] = True
    if getattr(args, "n_grid", None):
        try:
            overrides["n_grid"] = tuple(int(v) for v in args.n_grid.split(","))
        except ValueError:
            raise ConfigError(f"bad --n-grid {args.n_grid!r}") from None
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "mse":
            records = run_mse_experiment(cfg)
        else:
            records = run_scaling_benchmark(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LmmseError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    write_csv(records, args.out if args.out else sys.stdout)
    if args.out:
        log.info("wrote %d rows to %s", len(records), args.out)
    if args.plot_script:
        csv_name = str(args.out) if args.out else "results.csv"
        args.plot_script.write_text(gnuplot_script(csv_name, records, args.command))
    if args.figure:
        from .plotting import plot_mse, plot_scaling

        (plot_mse if args.command == "mse" else plot_scaling)(records, args.figure)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
