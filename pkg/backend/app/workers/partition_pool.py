"""
Partitioned Monte Carlo executor
Splits a sample budget into fixed-size partitions, each with its own counter-based generator
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from ..config import get_settings
from ..core.logger import get_logger

logger = get_logger(__name__)

R = TypeVar("R")


@dataclass(frozen=True)
class Partition:
    index: int
    size: int
    seed: int

    def generator(self) -> np.random.Generator:
        """Philox stream keyed by (seed, partition index); independent of worker scheduling"""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(self.index,))))


def plan_partitions(samples: int, partition_size: int, seed: int) -> List[Partition]:
    """Full partitions followed by one remainder partition"""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if partition_size < 1:
        raise ValueError("partition_size must be >= 1")
    sizes = [partition_size] * (samples // partition_size)
    if samples % partition_size:
        sizes.append(samples % partition_size)
    return [Partition(index=i, size=s, seed=seed) for i, s in enumerate(sizes)]


def run_partitions(samples: int, seed: int, task: Callable[[Partition], R],
                   partition_size: Optional[int] = None,
                   workers: Optional[int] = None) -> List[R]:
    """
    Evaluate task on every partition and return results in partition order.

    The partition layout depends only on (samples, partition_size, seed), so the
    reduced result is identical for any number of workers.
    """
    settings = get_settings()
    partition_size = partition_size or settings.mc_partition_size
    workers = workers or settings.mc_workers
    partitions = plan_partitions(samples, partition_size, seed)

    started = time.perf_counter()
    if workers == 1 or len(partitions) == 1:
        results = [task(p) for p in partitions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, partitions))

    logger.info("partitions_complete", samples=samples, partitions=len(partitions), workers=workers,
                seed=seed, elapsed_s=round(time.perf_counter() - started, 3))
    return results


def combine_columns(chunks: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate per-partition sample arrays along the path axis, in partition order"""
    return np.concatenate(list(chunks), axis=0)
