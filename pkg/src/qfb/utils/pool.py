"""
Batch pool for parallel Monte-Carlo dispatch.

Work is cut into fixed-size batches whose boundaries depend only on the item
count and the batch size, never on the number of threads. Each batch gets its
own counter-based stream, and results come back in batch order, so reductions
are reproducible at any thread count.
"""

import logging
import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from .rng import stream

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_BATCH_SIZE = 20_000


@dataclass(frozen=True)
class Batch:
    """A contiguous slice of Monte-Carlo items."""

    index: int
    start: int
    size: int


def default_threads() -> int:
    """Hardware parallelism, at least one."""
    return max(1, os.cpu_count() or 1)


class BatchPool:
    """Pool of worker threads for batched, seeded Monte-Carlo work."""

    def __init__(self, threads: int | None = None, batch_size: int = DEFAULT_BATCH_SIZE):
        if threads is not None and threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")

        self.threads = threads or default_threads()
        self.batch_size = batch_size
        logger.debug("Initialized pool with %s threads, batch size %s", self.threads, batch_size)

    def batches(self, n_items: int) -> list[Batch]:
        """Split n_items into batches; the last one may be short."""
        if n_items < 1:
            raise ValueError(f"n_items must be >= 1, got {n_items}")
        return [
            Batch(index=i, start=start, size=min(self.batch_size, n_items - start))
            for i, start in enumerate(range(0, n_items, self.batch_size))
        ]

    def map(
        self,
        work: Callable[[Batch, np.random.Generator], T],
        n_items: int,
        seed: int,
        tag: str,
    ) -> list[T]:
        """
        Run work on every batch in parallel.

        Args:
            work: Callable receiving the batch and its dedicated generator
            n_items: Total number of items (shots, cycles, chains)
            seed: Master seed
            tag: Stage tag used to key the random streams

        Returns:
            One result per batch, in batch order
        """
        batches = self.batches(n_items)

        def run(batch: Batch) -> T:
            return work(batch, stream(seed, tag, batch.index))

        if self.threads == 1 or len(batches) == 1:
            return [run(batch) for batch in batches]

        with ThreadPoolExecutor(max_workers=min(self.threads, len(batches))) as executor:
            return list(executor.map(run, batches))
