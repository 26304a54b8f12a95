"""Command-line entry point: ``steaneqec {run,preset,tables,check}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

import yaml

from . import __version__
from .codes import build_lookup_table, flag_lookup_table, make_code, render_table
from .harness import PRESETS, ConfigError, emit_results, fault_tolerance_suite, load_configs, preset, run_all

log = logging.getLogger("steaneqec")


def _noise_item(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), yaml.safe_load(value)


def _rounds(text: str) -> list[int]:
    try:
        return [int(r) for r in text.split(",") if r.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"rounds must be comma-separated integers, got {text!r}") from None


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shots", type=int, help="shots per point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="sampling processes (default: $STEANEQEC_WORKERS or 1)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall time in JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steaneqec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experiments from a YAML config")
    run.add_argument("--config", required=True, help="YAML file with one config or a list")
    _add_run_options(run)

    pre = sub.add_parser("preset", help="run a figure preset grid")
    pre.add_argument("name", choices=PRESETS)
    _add_run_options(pre)
    pre.add_argument("--rounds", type=_rounds, help="comma-separated round counts, e.g. 0,1,2")
    pre.add_argument("--profile", help="noise profile replacing the preset's")
    pre.add_argument("--noise", type=_noise_item, action="append", default=[], metavar="KEY=VALUE",
                     help="noise parameter override, repeatable")

    tables = sub.add_parser("tables", help="print the color-code lookup tables")
    tables.add_argument("--family", choices=("X", "Z"), default="Z", help="syndrome family")

    check = sub.add_parser("check", help="exhaustive single-fault check of the shipped circuits")
    check.add_argument("--rounds", type=int, default=1)
    check.add_argument("--no-idle", action="store_true", help="skip idle fault locations")
    return parser


def _overrides(args) -> dict:
    out = {}
    for name in ("shots", "seed", "workers"):
        if getattr(args, name) is not None:
            out[name] = getattr(args, name)
    return out


def _emit(results, args) -> None:
    text = emit_results(results, args.format, include_timing=args.timing)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    configs = [c.replace(**_overrides(args)) for c in load_configs(args.config)]
    _emit(run_all(configs), args)
    return 0


def _cmd_preset(args) -> int:
    overrides = _overrides(args)
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.profile is not None:
        overrides["noise_profile"] = args.profile
    if args.noise:
        overrides["noise"] = dict(args.noise)
    _emit(run_all(preset(args.name, **overrides)), args)
    return 0


def _cmd_tables(args) -> int:
    code = make_code("color")
    print("Lookup table")
    print(render_table(build_lookup_table(code, args.family)))
    print()
    print("Flag lookup table")
    print(render_table(flag_lookup_table(code, args.family)))
    return 0


def _cmd_check(args) -> int:
    reports = fault_tolerance_suite(args.rounds, include_idle=not args.no_idle)
    for report in reports:
        print(report.summary())
    failed = [r for r in reports if not r.passed]
    if failed:
        for report in failed:
            for fault in report.failures[:5]:
                print(f"  {report.name}: {fault.describe(report.circuit)}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {"run": _cmd_run, "preset": _cmd_preset, "tables": _cmd_tables, "check": _cmd_check}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
