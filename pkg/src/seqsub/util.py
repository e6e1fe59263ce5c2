"""Small shared helpers: bitmask sets, seed splitting, bounded parallelism."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
U = TypeVar("U")

#: Environment variable capping worker threads for trial loops.
THREADS_ENV = "SEQSUB_THREADS"


def mask_of(items: Iterable[int]) -> int:
    """Bitmask with bit j set for each 0-based product j in `items`."""
    m = 0
    for j in items:
        m |= 1 << j
    return m


def iter_bits(mask: int) -> Iterator[int]:
    """Yield set bit positions of `mask` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def split_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """Derive `n` independent child seeds from a root seed (fixed splitting rule)."""
    if isinstance(seed, np.random.SeedSequence):
        return seed.spawn(n)
    return np.random.SeedSequence(seed).spawn(n)


def thread_count() -> int:
    """Worker cap from SEQSUB_THREADS; defaults to 1 (serial, fully deterministic)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], U], items: Sequence[T]) -> list[U]:
    """Order-preserving map, threaded when SEQSUB_THREADS > 1.

    Results are collected by index, so the output is independent of scheduling.
    """
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
