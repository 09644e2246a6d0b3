"""Commands about the projective action: regularity, decay and the counterexample."""

import argparse

from app.interfaces.cli.arg_types import int_list, positive_int


def register(
    subparsers: argparse._SubParsersAction,
    parents: tuple[argparse.ArgumentParser, argparse.ArgumentParser],
) -> None:
    regularity = subparsers.add_parser(
        "regularity",
        parents=list(parents),
        help="regularity profile of the stationary measure near hyperplanes",
    )
    regularity.add_argument("--points", dest="stationary_points", type=positive_int)
    regularity.add_argument("--hyperplanes", dest="hyperplane_count", type=positive_int)

    decay = subparsers.add_parser(
        "decay", parents=list(parents), help="exponential decay estimates, one item at a time"
    )
    decay.add_argument("--item", dest="decay_item", type=int, choices=range(1, 6))
    decay.add_argument("--n-grid", dest="n_grid", type=int_list, metavar="N1,N2,...")
    decay.add_argument("--rate", dest="decay_rate", type=float)

    subparsers.add_parser(
        "counterexample",
        parents=list(parents),
        help="exact and statistical checks of the non strongly irreducible example",
    )
