"""``pcn-sim`` command line: generate workloads, run experiments, build report tables.

Exit codes: 0 ok, 1 usage, 2 config, 3 runtime.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import harness
from .errors import ConfigError, InvalidParams, PCNError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _experiment_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment config file (INI)")
    src.add_argument("--preset", choices=harness.PRESETS, help="built-in experiment config")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--policy", choices=["common", "fixed-random"], action="append",
                   help="weight policy (repeat to compare several)")
    p.add_argument("--connections", type=int, action="append", metavar="K",
                   help="ingress points per customer (repeatable)")
    p.add_argument("--imbalance-rate", type=float, action="append", metavar="R",
                   help="skew rate for skewed workloads (repeatable)")
    p.add_argument("--files", type=int, help="number of workload files")
    p.add_argument("--replications", type=int, help="seeds per workload file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcn-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    gen = sub.add_parser("generate", help="write workload and binding files")
    _experiment_args(gen)
    run = sub.add_parser("run", help="run all simulations and aggregate them")
    _experiment_args(run)
    rep = sub.add_parser("report", help="comparison tables from aggregate files")
    rep.add_argument("aggregates", nargs="*", help="aggregate_*.json files")
    rep.add_argument("--out", default=".", help="directory for the CSV tables")
    return parser


def _config(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else harness.load_preset(args.preset)
    return harness.override(
        cfg, seed=args.seed, policies=args.policy, connections=args.connections,
        rates=args.imbalance_rate, files=args.files, replications=args.replications,
        out=args.out, jobs=args.jobs,
    ).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            if not args.aggregates:
                print("pcn-sim report: no aggregate files given", file=sys.stderr)
                return EXIT_USAGE
            for path in harness.cmd_report(args.aggregates, args.out):
                print(path)
            return EXIT_OK
        cfg = _config(args)
        if args.command == "generate":
            paths = harness.cmd_generate(cfg)
            print(f"wrote {len(paths)} files to {cfg.out}/workloads")
        else:
            print(harness.describe(cfg), file=sys.stderr)
            t0 = time.perf_counter()
            for path in harness.cmd_run(cfg):
                print(path)
            print(f"done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    except (ConfigError, InvalidParams) as exc:
        print(f"pcn-sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PCNError, OSError) as exc:
        print(f"pcn-sim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
