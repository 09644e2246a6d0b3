"""Argument parser for the ``specrad`` command."""

import argparse

from app.interfaces.cli import certify_commands, stationary_commands, walk_commands
from app.interfaces.cli.arg_types import int_list, positive_int, u64

ENSEMBLES = ["notconv", "positive_pair", "elementary", "gaussian_sl"]


def common_parser() -> argparse.ArgumentParser:
    """Flags shared by every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--seed", type=u64, dest="master_seed", metavar="U64")
    common.add_argument("--threads", type=positive_int, metavar="N")
    common.add_argument("--out", dest="out_dir", metavar="DIR")
    common.add_argument("--format", choices=["csv", "json", "both"])
    return common


def walk_parser() -> argparse.ArgumentParser:
    """Flags of commands that run Monte Carlo walks."""
    walk = argparse.ArgumentParser(add_help=False)
    walk.add_argument("--n", type=positive_int)
    walk.add_argument("--trials", type=positive_int)
    walk.add_argument("--checkpoints", type=int_list, metavar="N1,N2,...")
    walk.add_argument("--ensemble", choices=ENSEMBLES)
    walk.add_argument("--dim", type=positive_int)
    walk.add_argument("--lambda", dest="lambda_", type=float, metavar="LAMBDA")
    walk.add_argument("--theta", type=float)
    return walk


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specrad",
        description="Spectral radius, norm and projective statistics of random matrix products",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common, walk = common_parser(), walk_parser()
    certify_commands.register(subparsers, common)
    walk_commands.register(subparsers, (common, walk))
    stationary_commands.register(subparsers, (common, walk))
    return parser
