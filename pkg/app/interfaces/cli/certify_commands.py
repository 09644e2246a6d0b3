"""certify: the proximality certificate on one matrix or a random batch."""

import argparse

from app.interfaces.cli.arg_types import positive_int


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    certify = subparsers.add_parser(
        "certify",
        parents=[common],
        help="check the certificate bound rho/norm >= delta_g/2",
    )
    certify.add_argument(
        "matrix_path",
        nargs="?",
        metavar="MATRIX",
        help="JSON file with the matrix rows",
    )
    certify.add_argument("--batch", type=positive_int, metavar="N", help="check N random matrices instead")
