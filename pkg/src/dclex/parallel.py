"""Deterministic chunked parallelism.

Work is split into fixed-size chunks and per-chunk results are combined in
chunk order. The chunk size never depends on the worker count, so outputs
are bit-identical whether one thread or many run the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

CHUNK_SIZE = 1024

T = TypeVar("T")
R = TypeVar("R")


def process_chunks(
    func: Callable[[Sequence[T]], R],
    items: Sequence[T],
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> list[R]:
    """Apply `func` to consecutive chunks of `items`; results in chunk order."""
    chunks = [items[lo : lo + chunk_size] for lo in range(0, len(items), chunk_size)]
    if threads <= 1 or len(chunks) <= 1:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, chunks))
