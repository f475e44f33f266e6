"""Ordered parallel map over replication tasks.

Tasks are indexed up front and results are reassembled by index, so the
output never depends on completion order or on the number of workers.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor

# replications per bench task; fixed so chunk contents never depend on workers
CHUNK_SIZE = 250


def chunks(reps, size=CHUNK_SIZE):
    return [(lo, min(lo + size, reps)) for lo in range(0, reps, size)]


def ordered_map(fn, tasks, workers=1):
    """``[fn(t) for t in tasks]`` evaluated on up to ``workers`` processes."""
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(fn, tasks))
