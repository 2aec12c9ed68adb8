"""Command-line front end for the experiment drivers.

Three subcommands map onto the three experiment kinds:

    fcac privacy-sweep --config sweep.json --out results/
    fcac continual     --config continual.json --seed 3
    fcac benchmark     --config bench.json --max-points 2000

The config file is JSON; ``--seed`` and ``--out`` override its seed list
and output directory.  With no output directory the full report is printed
to stdout instead.  FCAC_THREADS caps how many clients train in parallel.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .experiments import cmd_benchmark, cmd_continual, cmd_privacy_sweep, load_config

_KIND_BY_COMMAND = {
    "privacy-sweep": "privacy-sweep",
    "continual": "continual-synthetic",
    "benchmark": "federated-benchmark",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcac",
        description="Privacy-preserving continual federated clustering experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "privacy-sweep": "distance between a dataset and its noised copies over a budget grid",
        "continual": "two clients, three rounds of arriving data, persistent state",
        "benchmark": "clustering metrics on a labeled dataset over a seed x budget grid",
    }
    for name in _KIND_BY_COMMAND:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="path to a JSON config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="run only this seed, overriding the config list")
        sp.add_argument("--out", default=None,
                        help="output directory, overriding the config")
        sp.add_argument("--dump-nodes", action="store_true",
                        help="write per-round node CSVs")
        sp.add_argument("--dump-transfer", action="store_true",
                        help="write per-round client-to-server transfer CSVs")
        if name == "benchmark":
            sp.add_argument("--max-points", type=int, default=None,
                            help="subsample the dataset to this many points per seed")
    return parser


def _max_workers() -> int | None:
    raw = os.environ.get("FCAC_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        print(f"warning: ignoring non-integer FCAC_THREADS={raw!r}", file=sys.stderr)
        return None
    return n if n > 1 else None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        expected = _KIND_BY_COMMAND[args.command]
        if config.kind != expected:
            raise ValueError(
                f"config kind {config.kind!r} does not match the "
                f"{args.command!r} command (expected {expected!r})"
            )
        if args.seed is not None:
            config = dataclasses.replace(config, seeds=(args.seed,))
        if args.out is not None:
            config = dataclasses.replace(config, out_dir=args.out)
        workers = _max_workers()
        if args.command == "privacy-sweep":
            report = cmd_privacy_sweep(config)
        elif args.command == "continual":
            report = cmd_continual(config, max_workers=workers)
        else:
            report = cmd_benchmark(
                config,
                max_points=args.max_points,
                dump_nodes=args.dump_nodes,
                dump_transfer=args.dump_transfer,
                max_workers=workers,
            )
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.out_dir:
        print(f"report written to {os.path.join(config.out_dir, 'report.json')}")
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
