"""Deterministic block-parallel helpers.

Work is split into blocks whose boundaries depend only on the input size,
never on the thread count, and per-block results are combined in block
order.  Thread count therefore affects scheduling only, and any reduction
performed inside or across blocks sees the same operand order every run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

DEFAULT_BLOCK = 2048


def block_ranges(n: int, block: int = DEFAULT_BLOCK) -> list[tuple[int, int]]:
    """Fixed [start, stop) partition of range(n), independent of threads."""
    if n <= 0:
        return []
    return [(i, min(i + block, n)) for i in range(0, n, block)]


def map_blocks(
    fn: Callable[[int, int], T],
    ranges: Sequence[tuple[int, int]],
    threads: int = 1,
) -> list[T]:
    """Apply ``fn(start, stop)`` to each block, returning results in block
    order."""
    if threads <= 1 or len(ranges) <= 1:
        return [fn(start, stop) for start, stop in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(r[0], r[1]), ranges))
