"""Command-line entry point: ``colocsim <subcommand> [--config PATH] [--seed N] [--runs N] [--out DIR]``.

Exit status is 0 on success, 2 on a bad config and 3 when a simulation
breaks one of its own invariants.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .cluster import ClusterFull, PlacementOverflow
from .harness import (ConfigError, config_help, parse_assignments, parse_config, primary_csv, recompute_metrics,
                      run_experiment)

SUBCOMMANDS = {
    "fingerprint": "fingerprint",
    "attack": "attack",
    "transfer": "transfer_matrix",
    "doubledip": "doubledip_eval",
    "warmstart": "warmstart_cost",
    "oracle": "oracle_sweep",
}

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _common(p):
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--runs", type=int, help="runs per cell (overrides the config)")
    p.add_argument("--out", metavar="DIR", help="write manifest and CSVs here")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key; repeatable")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="colocsim", description="Serverless co-location simulator.",
        epilog="config keys:\n" + config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        _common(sub.add_parser(name, help=f"run the {exp} recipe"))
    m = sub.add_parser("metrics", help="recompute AE/PA/warm-start ratio from saved event logs")
    m.add_argument("logs", nargs="+", help="event log CSVs or directories holding them")
    m.add_argument("--attacker-prefix", default="attacker", help="owners with this prefix are attackers")
    m.add_argument("--victim", default="victim", help="victim owner id")
    m.add_argument("--windows", type=int, default=10, help="tick windows for max PA")
    m.add_argument("--out", metavar="FILE", help="write the CSV here instead of stdout")
    return parser


def _config_from_args(args):
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    overrides = {}
    for item in args.set:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    wanted = SUBCOMMANDS[args.command]
    given = parse_assignments(text).get("experiment")
    if given and given[0] != wanted:
        raise ConfigError(f"line {given[1]}: config is for {given[0]!r} but the subcommand runs {wanted!r}")
    overrides["experiment"] = wanted
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.runs is not None:
        overrides["runs"] = str(args.runs)
    if args.out is not None:
        overrides["out_dir"] = args.out
    return parse_config(text, overrides)


def _log_files(items):
    paths = []
    for item in items:
        if os.path.isdir(item):
            paths += sorted(glob.glob(os.path.join(item, "*.csv")))
        else:
            paths.append(item)
    return paths


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "metrics":
            try:
                text = recompute_metrics(_log_files(args.logs), args.attacker_prefix, args.victim, args.windows)
            except (OSError, ValueError) as exc:
                print(f"cannot read logs: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            if args.out:
                with open(args.out, "w", newline="") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        cfg = _config_from_args(args)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssertionError, PlacementOverflow, ClusterFull) as exc:
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    sys.stdout.write(primary_csv(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
