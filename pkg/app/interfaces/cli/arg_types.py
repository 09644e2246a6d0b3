"""argparse value types."""

import argparse


def u64(value: str) -> int:
    seed = int(value, 0)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return seed


def positive_int(value: str) -> int:
    count = int(value)
    if count < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return count


def int_list(value: str) -> tuple[int, ...]:
    """Comma separated integers, e.g. ``50,100,200``."""
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {value}") from e
