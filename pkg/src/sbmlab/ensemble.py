"""Replica fan-out.

Replicas are split into contiguous index batches. Each batch is handled by a
top-level function that returns per-replica arrays; batches may run in a
process pool. Results are written back by replica index, so every reduction
downstream sees the same array regardless of worker count or completion
order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable

import numpy as np

from .noise import SeedSpec

__all__ = ["seeds_for", "run_replicas", "STREAM_FAMILY"]

#: stream-id offsets that keep independent ensembles of one run apart
STREAM_FAMILY = {"lhs": 0, "rhs": 1 << 40, "a": 2 << 40, "b": 3 << 40, "c": 4 << 40}


def seeds_for(base_seed: int, idx, offset: int = 0) -> list[SeedSpec]:
    return [SeedSpec(int(base_seed), int(offset + i)) for i in idx]


def _batches(n: int, batch_size: int):
    return [np.arange(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]


def run_replicas(
    fn: Callable[..., dict],
    n: int,
    *args,
    batch_size: int = 500,
    workers: int = 1,
) -> dict[str, np.ndarray]:
    """Call ``fn(*args, idx)`` on index batches and stitch results by index.

    ``fn`` returns a dict of arrays whose first axis runs over ``idx``.
    """
    batches = _batches(n, batch_size)
    out: dict[str, np.ndarray] = {}

    def place(idx, res):
        for key, val in res.items():
            val = np.asarray(val)
            if key not in out:
                out[key] = np.empty((n,) + val.shape[1:], dtype=val.dtype)
            out[key][idx] = val

    if workers <= 1 or len(batches) == 1:
        for idx in batches:
            place(idx, fn(*args, idx))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, *args, idx): idx for idx in batches}
        for fut in as_completed(futures):
            place(futures[fut], fut.result())
    return out
