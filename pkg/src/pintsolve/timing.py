"""Thread-safe accumulation of time spent in transforms and spatial solvers."""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager

_lock = threading.Lock()
_totals: dict[str, float] = {"fft": 0.0, "spatial": 0.0}


@contextmanager
def timed(category: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        with _lock:
            _totals[category] = _totals.get(category, 0.0) + elapsed


def snapshot() -> dict[str, float]:
    with _lock:
        return dict(_totals)


def reset() -> None:
    with _lock:
        for key in _totals:
            _totals[key] = 0.0
