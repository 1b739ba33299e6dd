"""Shared-memory thread pool for the time-parallel block loops.

A single process-wide pool is configured once (typically by the CLI).  Block
maps write to disjoint output slots, so results are deterministic and
independent of the thread count.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

_lock = threading.Lock()
_pool: ThreadPoolExecutor | None = None
_num_threads = 1


def set_num_threads(n: int) -> None:
    global _pool, _num_threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    with _lock:
        if _pool is not None:
            _pool.shutdown(wait=True)
            _pool = None
        _num_threads = n
        if n > 1:
            _pool = ThreadPoolExecutor(max_workers=n)


def get_num_threads() -> int:
    return _num_threads


def block_map(fn: Callable[[int], None], count: int) -> None:
    """Run fn(k) for k in range(count); fn must write only to its own slot."""
    pool = _pool
    if pool is None or count < 2:
        for k in range(count):
            fn(k)
        return
    list(pool.map(fn, range(count)))
