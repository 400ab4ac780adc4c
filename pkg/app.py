"""
Adaptive IRC engine - command-line frontend
"""

from typing import List, Optional, get_type_hints
import argparse
import json
import logging
import sys

from threadpoolctl import threadpool_limits

from commands import COMMANDS, RUN_FIELDS, RunConfig, resolve_config
from helper import EXIT_CODES, AIRCError, UsageError, configure_logging, get_thread_cap

logger = logging.getLogger(__name__)

# ============================================
# ARGUMENT PARSING
# ============================================

HELP = {
    "oversmoothing": "energy and rank per layer on an SBM sample (linear, GCN, both IRC strategies)",
    "train": "node classification over several seeds",
    "depth-sweep": "test accuracy against depth per variant",
    "limit-check": "unrolled simplified propagation against its closed-form limit",
    "bench": "wall-clock of one IRC layer over a grid of edge counts and widths",
    "pagerank-lambda": "dump the PageRank-based residual strengths",
    "generate": "write an SBM dataset bundle",
    "theory": "randomized property suites for the energy bounds",
    "grid": "hyperparameter grid search",
}


def _flag_type(annotation):
    if annotation in (int, float, str):
        return annotation
    if annotation == Optional[float]:
        return float
    if annotation == Optional[str]:
        return str
    return json.loads


def _run_options() -> argparse.ArgumentParser:
    """Every RunConfig key as a --kebab-case flag; unset flags stay None so the config file wins."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="flat JSON object of run keys")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    hints = get_type_hints(RunConfig)
    for name in RUN_FIELDS:
        flag = "--" + name.replace("_", "-")
        if hints[name] is bool:
            parser.add_argument(flag, dest=name, action="store_true", default=None)
        else:
            parser.add_argument(flag, dest=name, type=_flag_type(hints[name]), default=None)
    return parser


def build_parser() -> argparse.ArgumentParser:
    options = _run_options()
    parser = argparse.ArgumentParser(prog="airc", description="Adaptive initial residual connection GNN engine")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[options], help=HELP[name])
    return parser


# ============================================
# MAIN
# ============================================

def run(argv: Optional[List[str]] = None) -> int:
    """
    Parses argv, resolves the configuration and runs the command.
    Returns:
        0 on success, 1 on a verification failure or engine error, 2 on a usage error
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_CODES.SUCCESS.value if e.code == 0 else EXIT_CODES.USAGE_ERROR.value
    configure_logging(args.verbose)

    try:
        overrides = {name: getattr(args, name) for name in RUN_FIELDS}
        cfg = resolve_config(args.config, overrides)
        with threadpool_limits(limits=get_thread_cap()):
            return COMMANDS[args.command](cfg)
    except UsageError as e:
        logger.error(f"usage: {e}")
        return EXIT_CODES.USAGE_ERROR.value
    except AIRCError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CODES.VERIFICATION_FAILED.value


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
