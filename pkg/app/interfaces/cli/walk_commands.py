"""Commands over Monte Carlo sample sets of the left walk."""

import argparse

CENTERING = ["pilot", "in_sample"]


def register(
    subparsers: argparse._SubParsersAction,
    parents: tuple[argparse.ArgumentParser, argparse.ArgumentParser],
) -> None:
    simulate = subparsers.add_parser(
        "simulate", parents=list(parents), help="raw per-trial observables at each checkpoint"
    )
    simulate.add_argument("--side", choices=["left", "right"])
    simulate.add_argument(
        "--full-spectrum",
        dest="full_spectrum",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="track exterior powers for accurate lower Cartan and Jordan coordinates",
    )

    clt = subparsers.add_parser(
        "clt", parents=list(parents), help="central limit theorem for ln rho(L_n)"
    )
    clt.add_argument("--observable", choices=["log_specrad", "log_norm"])
    clt.add_argument("--centering", choices=CENTERING)

    subparsers.add_parser(
        "ratio", parents=list(parents), help="tail of rho(L_n)/||L_n|| and certificate rate"
    )
    subparsers.add_parser(
        "delta",
        parents=list(parents),
        help="tail of delta(v+, H-) and asymptotic independence",
    )
    subparsers.add_parser(
        "lyapunov", parents=list(parents), help="Lyapunov spectrum and Cartan-Jordan gap"
    )
    eigen = subparsers.add_parser(
        "eigen-clt", parents=list(parents), help="covariance of the eigenvalue-vector CLT"
    )
    eigen.add_argument("--centering", choices=CENTERING)
