"""Command line entry point: ``aoptenc <command> --config FILE --out DIR [--seed N] [--set key=value]``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 check failure.
"""
import argparse
import logging
import sys

import numpy as np

from ..fem import NegativeCurvatureError
from .config import ConfigError, ExperimentConfig, load_config, parse_value
from .studies import STUDIES

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
CHECK_COMMANDS = ("gradcheck", "counter-audit")


def build_parser():
    # argparse exits with 2 on usage errors, the config-error code
    parser = argparse.ArgumentParser(
        prog="aoptenc", description="A-optimal source encoding studies for 2-D Helmholtz inversion.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in STUDIES:
        p = sub.add_parser(name, parents=[common], help=(STUDIES[name].__doc__ or name).strip().splitlines()[0])
        p.add_argument("--config", help="flat key = value config file (defaults apply when omitted)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="master seed; overrides the config's 'seed'")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    return parser


def resolve_config(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        overrides[key] = parse_value(value)
    if args.seed is not None:
        overrides["seed"] = args.seed
    return config.with_overrides(**overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = STUDIES[args.command](config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, NegativeCurvatureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if out.report:
        print(out.report)
    for path in out.tables:
        print(f"wrote {path}")
    if out.failed:
        return EXIT_CHECK if args.command in CHECK_COMMANDS else EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
