"""Counter-based random streams.

Every stream is a Philox generator keyed by (master_seed, trial) with the
stream purpose in the top word of the counter. Two streams with different
addresses never share a block of output, whatever order they are consumed
in, so results do not depend on how trials are scheduled.
"""

from enum import IntEnum

import numpy as np

from app.domain.walk import RngStream


class StreamPurpose(IntEnum):
    TRIALS = 0
    PILOT = 1
    HYPERPLANES = 2
    REFERENCE = 3
    STATIONARY = 4
    BATCH_CERTIFY = 5
    MOMENTS = 6


def stream(master_seed: int, purpose: StreamPurpose, trial: int = 0) -> RngStream:
    return RngStream(master_seed=master_seed, purpose=int(purpose), trial=trial)


def generator_for(address: RngStream) -> np.random.Generator:
    """Build the generator for one stream address.

    Args:
        address: master seed, purpose and trial index

    Returns:
        A fresh generator positioned at the start of the stream
    """
    key = address.master_seed | (address.trial << 64)
    counter = address.purpose << 192
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def seed_lineage(master_seed: int, *purposes: StreamPurpose) -> dict[str, int]:
    """Seed description embedded in artifacts."""
    lineage = {"master_seed": master_seed}
    lineage.update({f"purpose_{p.name.lower()}": int(p) for p in purposes})
    return lineage
