"""Ordered worker pool. Results come back in input order whatever the thread count."""

import os
from collections import deque
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import Future, ThreadPoolExecutor
from typing import TypeVar

from app.core.config import settings

T = TypeVar("T")
R = TypeVar("R")

_DONE = object()


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else DEFAULT_THREADS, else available parallelism."""
    if threads is not None:
        return max(1, threads)
    if settings.DEFAULT_THREADS is not None:
        return max(1, settings.DEFAULT_THREADS)
    return os.cpu_count() or 1


def ordered_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: int,
    window: int | None = None,
) -> Iterator[R]:
    """Apply ``fn`` to ``items`` on ``threads`` workers, yielding in input order.

    At most ``window`` tasks are in flight, which bounds memory for long
    item streams. The first exception raised by a task is re-raised in
    input order; tasks not yet started are cancelled.
    """
    if threads <= 1:
        for item in items:
            yield fn(item)
        return

    window = window or 2 * threads
    source = iter(items)
    pool = ThreadPoolExecutor(max_workers=threads, thread_name_prefix="specrad")
    pending: deque[Future[R]] = deque()
    try:
        for item in source:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                break
        while pending:
            result = pending.popleft().result()
            nxt = next(source, _DONE)
            if nxt is not _DONE:
                pending.append(pool.submit(fn, nxt))
            yield result
    finally:
        pool.shutdown(wait=True, cancel_futures=True)

