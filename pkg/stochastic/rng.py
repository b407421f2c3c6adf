"""Counter-based random streams.

Every batch is cut into fixed-size chunks and chunk k draws from its own
Philox stream ``SeedSequence(seed, spawn_key=(base + k,))``. The chunk size does
not depend on the thread count, so results are identical for any ``--threads``.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np

from config import env
from models.domain import RngSeed

logger = logging.getLogger("asianhedge.rng")

T = TypeVar("T")

# Disjoint stream ranges per consumer of a run seed.
PATH_STREAMS = 0
POOL_STREAMS = 1 << 24
BRIDGE_STREAMS = 2 << 24
DIRECT_STREAMS = 3 << 24
REFINE_STREAMS = 4 << 24
MOMENT_STREAMS = 5 << 24


def generator(seed: RngSeed) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed.seed, spawn_key=(seed.stream,))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(total: int, chunk: Optional[int] = None) -> List[int]:
    chunk = chunk or env.STREAM_CHUNK
    if total < 1:
        raise ValueError("total must be >= 1")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_streams(
    fn: Callable[[np.random.Generator, int, int], T],
    seed: int,
    total: int,
    base_stream: int = 0,
    chunk: Optional[int] = None,
    threads: Optional[int] = None,
) -> List[T]:
    """Apply ``fn(rng, size, stream)`` to every chunk; results come back in stream order."""
    sizes = chunk_sizes(total, chunk)
    jobs = [(base_stream + k, size) for k, size in enumerate(sizes)]

    def run(job):
        stream, size = job
        return fn(generator(RngSeed(seed=seed, stream=stream)), size, stream)

    workers = max(1, min(threads or env.THREADS, len(jobs)))
    if workers == 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def row_streams(total: int, base_stream: int = 0, chunk: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Stream id and row within that stream for every row ``map_streams`` stacks."""
    sizes = chunk_sizes(total, chunk)
    streams = np.concatenate([np.full(size, base_stream + k, dtype=np.int64) for k, size in enumerate(sizes)])
    rows = np.concatenate([np.arange(size, dtype=np.int64) for size in sizes])
    return streams, rows
