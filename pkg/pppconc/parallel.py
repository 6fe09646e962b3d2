"""Deterministic replication pool.

Work is split into contiguous chunks of replication indices and the results
are reassembled in index order, so the output does not depend on how many
threads ran or in which order chunks finished.
"""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger("pppconc.parallel")

T = TypeVar("T")


class ReplicationPool:
    """Fixed-size worker pool over replication indices."""

    def __init__(self, threads: int = 1, chunk_size: int = 256):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
        self.threads = threads
        self.chunk_size = chunk_size

    def chunks(self, count: int) -> list[range]:
        """Contiguous index ranges covering ``range(count)``."""
        return [
            range(start, min(start + self.chunk_size, count))
            for start in range(0, count, self.chunk_size)
        ]

    def map(self, fn: Callable[[int], T], count: int) -> list[T]:
        """Apply ``fn`` to every index in ``range(count)``; results in index order."""

        def run_block(block: range) -> list[T]:
            return [fn(i) for i in block]

        blocks = self.map_chunks(run_block, count)
        return [item for block in blocks for item in block]

    def map_chunks(self, fn: Callable[[range], T], count: int) -> list[T]:
        """Apply ``fn`` to each chunk of indices; one result per chunk in order."""
        blocks = self.chunks(count)
        if self.threads == 1 or len(blocks) <= 1:
            return [fn(block) for block in blocks]

        logger.debug(
            f"Dispatching {count} replications in {len(blocks)} chunks "
            f"over {self.threads} threads"
        )
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            # executor.map preserves submission order
            return list(executor.map(fn, blocks))
