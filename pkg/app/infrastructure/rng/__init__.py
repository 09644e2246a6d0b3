# Random streams and discrete samplers

from app.infrastructure.rng.alias import AliasTable
from app.infrastructure.rng.streams import (
    StreamPurpose,
    generator_for,
    seed_lineage,
    stream,
)

__all__ = [
    "AliasTable",
    "StreamPurpose",
    "generator_for",
    "seed_lineage",
    "stream",
]
