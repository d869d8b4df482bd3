"""Worker-pool helper honoring the ESN_RMT_THREADS cap (0 or unset = auto)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("ESN_RMT_THREADS", "").strip()
    if raw in ("", "0"):
        return os.cpu_count() or 1
    count = int(raw)
    if count < 0:
        raise ValueError(f"ESN_RMT_THREADS must be >= 0, got {count}")
    return count


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Order-preserving map; results are independent of the worker count
    because each item is computed from its own inputs only."""
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
