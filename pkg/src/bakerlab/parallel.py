"""Deterministic fan-out over sample chunks.

Every sample draws from its own generator keyed by ``(seed, index)`` and the
chunk boundaries depend only on the sample count, so results are identical
for any number of worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
import os

import numpy as np


def sample_rng(seed, index):
    """Independent generator for sample ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def chunk_ranges(n, size=64):
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def map_chunks(fn, ranges, threads=1):
    """``[fn(r) for r in ranges]``, evaluated on up to ``threads`` workers."""
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, ranges))
    return [fn(r) for r in ranges]


def default_threads():
    env = os.environ.get("BAKERLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
