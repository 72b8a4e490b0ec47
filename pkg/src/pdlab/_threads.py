"""Worker-pool helpers.  PDLAB_THREADS caps the worker count."""
from __future__ import annotations

import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor


def worker_count(task_count: int) -> int:
    cap = os.environ.get("PDLAB_THREADS")
    limit = os.cpu_count() or 1
    if cap is not None:
        try:
            limit = int(cap)
        except ValueError as exc:
            raise ValueError(f"PDLAB_THREADS must be an integer, got {cap!r}") from exc
        if limit < 1:
            raise ValueError(f"PDLAB_THREADS must be >= 1, got {limit}")
    return max(1, min(limit, task_count))


def pmap(fn: Callable, items: Iterable) -> list:
    """map preserving order; runs on a thread pool when it can help."""
    seq: Sequence = list(items)
    workers = worker_count(len(seq))
    if workers <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
