"""Chunked thread-pool map whose output never depends on the thread count."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

CHUNK = 4096


def chunk_bounds(total: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def chunked_map(fn: Callable[[int, int], object], total: int, threads: int = 1, chunk: int = CHUNK) -> list:
    """Call ``fn(start, stop)`` on fixed chunks and return results in chunk order.

    Chunk boundaries depend only on ``total`` and ``chunk``, so each result is
    computed on identical inputs whatever ``threads`` is.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    bounds = chunk_bounds(total, chunk)
    if threads == 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def map_items(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
