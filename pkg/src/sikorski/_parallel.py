"""Worker-pool helper.

SIKORSKI_THREADS caps parallelism for the embarrassingly parallel sweeps:
0 (or unset garbage) means auto, 1 forces serial execution.  Results come
back in submission order either way, so outputs never depend on timing.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["worker_count", "parallel_map"]


def worker_count() -> int:
    raw = os.environ.get("SIKORSKI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 0:
        n = 0
    if n == 0:
        return os.cpu_count() or 1
    return n


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    workers = min(worker_count(), max(len(items), 1))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
