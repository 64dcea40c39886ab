"""Command-line entry point: ``nogo-cool`` / ``python -m nogocool``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigInvalid, NoGoCoolError, NumericalFailure
from .runner import KIND_HELP, load_config_file, parse_config, run_batch

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("nogocool")


def _override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nogo-cool",
        description="Ground-state cooling feasibility under global system-bath unitaries.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_run_args(p):
        p.add_argument("config", help="scenario file (TOML or JSON)")
        p.add_argument("--seed", type=int, default=None, help="master seed; overrides the file's seed")
        p.add_argument("--out", type=Path, default=None, help="output directory for reports and CSV files")
        p.add_argument(
            "--set", dest="overrides", action="append", type=_override, default=[], metavar="KEY=VALUE",
            help="override a scenario field, e.g. parameters.s0=0.6 (repeatable)",
        )
        p.add_argument("--timing", action="store_true", help="record wall-clock seconds in reports")

    add_run_args(sub.add_parser("run", help="run every scenario in a config file"))
    add_run_args(sub.add_parser("bound-search", help="Haar-random bound search over the configured states"))
    sub.add_parser("list-scenarios", help="list scenario kinds and their parameters")
    return parser


def _execute(args) -> int:
    data = load_config_file(args.config)
    overrides = dict(args.overrides)
    if args.command == "bound-search":
        overrides["kind"] = "bound_search"
    if args.seed is not None and args.seed < 0:
        raise ConfigInvalid("--seed", "must be nonnegative")
    configs = parse_config(data, master_seed=args.seed, overrides=overrides)
    for report, path in run_batch(configs, args.out, args.timing):
        name = report.config_echo["name"]
        parts = [name]
        if report.verdict is not None:
            parts.append(f"verdict={report.verdict}")
        if report.bound is not None:
            parts.append(f"bound={report.bound:.12g}")
        parts.append(str(path))
        print("  ".join(parts))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command is None:
        parser.print_help()
        return EXIT_OK
    if args.command == "list-scenarios":
        for kind, text in KIND_HELP.items():
            print(f"{kind:20s} {text}")
        return EXIT_OK
    try:
        return _execute(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NoGoCoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
