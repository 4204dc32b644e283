"""
Thread-pool helper shared by the per-class / per-scene fan-outs.

Results always come back in submission order, so callers can merge them
sequentially and stay independent of the schedule. Each task runs in a copy
of the submitting thread's context, so ``structlog.contextvars`` bindings
(the scene being segmented) show up in worker log lines too.
"""

import contextvars
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from src.config.env import env

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None) -> int:
    if not threads:
        return env.max_threads
    return max(1, threads)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], *, threads: int | None = None) -> list[R]:
    items = list(items)
    workers = min(resolve_threads(threads), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # one context copy per task: a Context cannot be entered by two threads at once
        futures = [pool.submit(contextvars.copy_context().run, fn, item) for item in items]
        return [future.result() for future in futures]
