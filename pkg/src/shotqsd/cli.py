"""Command-line front end.

Usage::

    shotqsd <mode> --config <path> [--seed N] [--out DIR] [--threads K]
    shotqsd preset <name> [--out FILE]

Modes: simulate, sweep, markov-scan, washout, noise-test, crosscheck.
Exit codes: 0 success, 2 configuration/validation failure, 3 divergence
budget exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import MODES, PRESETS, apply_overrides, parse_config, preset_config
from .errors import ConfigError, DivergenceBudgetError, DivergenceError, InvalidParameterError
from .runner import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO, EXIT_OK, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotqsd",
        description="Stochastic-trajectory simulator for shot-noise-controlled dissipation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a {mode} experiment")
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", default=None, help="override out_dir")
        p.add_argument("--threads", type=int, default=None, help="override worker count")
    p = sub.add_parser("preset", help="emit a named preset configuration")
    p.add_argument("name", choices=sorted(PRESETS), help="preset name")
    p.add_argument("--out", default=None, help="write to a file instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "preset":
        text = preset_config(args.name)
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        return EXIT_OK

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.mode != args.command:
        print(
            f"error: config mode = {cfg.mode!r} does not match subcommand {args.command!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG

    try:
        cfg = apply_overrides(cfg, seed=args.seed, out_dir=args.out, threads=args.threads)
        files = run(cfg)
    except (ConfigError, InvalidParameterError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceBudgetError, DivergenceError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as err:
        print(f"error: I/O failure: {err}", file=sys.stderr)
        return EXIT_IO

    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
