# Worker pool

from app.infrastructure.parallel.pool import ordered_map, resolve_threads

__all__ = ["ordered_map", "resolve_threads"]
