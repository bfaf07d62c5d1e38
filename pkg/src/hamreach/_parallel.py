from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("HAMREACH_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def map_chunks(fn, chunks, workers: int | None = None):
    """Apply fn to each chunk, in parallel threads, preserving order."""
    chunks = list(chunks)
    n = min(worker_count(workers), len(chunks))
    if n <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, chunks))


def split(n_items: int, n_parts: int) -> list[range]:
    n_parts = max(1, min(n_parts, n_items)) if n_items else 1
    bounds = [round(i * n_items / n_parts) for i in range(n_parts + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(n_parts)]
