"""Command-line entry point.

    fpresample simulate-quantile --config t1.cfg --seed 42 --out t1.csv

Exit status: 0 on success, 2 for configuration problems, 3 when a numeric
routine fails. Diagnostics go to standard error.
"""

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, InvalidArgument, NumericFailure, SizeLimitError
from .checks import design_check, kernel_check, negative_controls, quantile_ci_report
from .config import PROFILES, load_config
from .report import render
from .studies import CONDITIONAL, MARGINAL, resolve_threads, run_quantile_study, run_test_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = {
    "quantile-ci": ("quantile-ci", lambda cfg, k: quantile_ci_report(cfg)),
    "simulate-quantile": ("quantile", run_quantile_study),
    "simulate-cond-test": ("cond-test", lambda cfg, k: run_test_study(cfg, CONDITIONAL, k)),
    "simulate-marg-test": ("marg-test", lambda cfg, k: run_test_study(cfg, MARGINAL, k)),
    "design-check": ("design", lambda cfg, k: design_check(cfg)),
    "kernel-check": ("kernel", kernel_check),
    "negative-controls": ("controls", negative_controls),
}

log = logging.getLogger("fpresample")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpresample", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="INI scenario file")
    parser.add_argument("--section", action="append", help="run only these sections (repeatable)")
    parser.add_argument("--seed", type=int, help="override the seed of every scenario")
    parser.add_argument("--out", help="output file (default: standard output)")
    parser.add_argument("--threads", type=int, help="worker processes (default: $FPRESAMPLE_THREADS or 1)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--profile", choices=sorted(PROFILES), help="replication scale (paper: reps=M=1000)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _select(scenarios, study, sections, path):
    chosen = [s for s in scenarios if s.study == study]
    if sections:
        missing = set(sections) - {s.name for s in scenarios}
        if missing:
            raise ConfigError(f"{path}: no section(s) {sorted(missing)}")
        chosen = [s for s in chosen if s.name in sections]
    if not chosen:
        raise ConfigError(f"{path}: no scenario with study = {study}")
    return chosen


def run(args) -> int:
    study, fn = COMMANDS[args.command]
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    threads = resolve_threads(args.threads)
    scenarios = _select(load_config(args.config, args.profile, args.seed), study, args.section, args.config)
    reports = []
    for cfg in scenarios:
        log.info("running %s (%s)", cfg.name, study)
        reports.append(fn(cfg, threads))
    text = render(reports, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return run(args)
    except (ConfigError, SizeLimitError, InvalidArgument) as exc:
        print(f"fpresample: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"fpresample: numeric failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fpresample: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(cli_main())
