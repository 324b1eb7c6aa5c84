"""Deterministic chunked Monte Carlo runner.

Work is cut into fixed-size chunks and each chunk gets its own random stream
derived from ``(seed, tag, chunk index)``. Results are reassembled in chunk
order, so the output depends on the seed and chunk size only, never on the
number of worker threads.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


def stream_tag(name: str) -> int:
    return zlib.crc32(name.encode())


def chunk_rng(seed: int, tag: int | str, index: int) -> np.random.Generator:
    if isinstance(tag, str):
        tag = stream_tag(tag)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(tag, index))))


def max_threads() -> int:
    return os.cpu_count() or 1


def chunked_map(
    fn: Callable[[np.random.Generator, int, int], object],
    total: int,
    chunk: int,
    seed: int,
    tag: int | str,
    threads: int = 1,
) -> list:
    """Call ``fn(rng, start, count)`` on consecutive chunks covering ``range(total)``.

    Returns the per-chunk results in chunk order.
    """
    if chunk <= 0:
        raise ValueError("chunk size must be positive")
    starts = list(range(0, total, chunk))
    jobs = [(i, s, min(chunk, total - s)) for i, s in enumerate(starts)]

    def run(job):
        i, s, c = job
        return fn(chunk_rng(seed, tag, i), s, c)

    if threads <= 1 or len(jobs) <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(run, jobs))
