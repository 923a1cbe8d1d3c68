"""Order-preserving process-pool map capped by ``QMEM_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

THREADS_ENV = "QMEM_THREADS"


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, computed in worker processes when useful.

    Results come back in input order regardless of completion order.
    """
    items = list(items)
    n = min(workers or max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
