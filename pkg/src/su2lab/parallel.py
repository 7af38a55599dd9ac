"""Worker-count and seed-stream helpers for deterministic fan-out."""
from __future__ import annotations

import os

import numpy as np

ENV_THREADS = "SU2LAB_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Number of worker threads, capped by ``SU2LAB_THREADS`` when set."""
    cap = os.environ.get(ENV_THREADS)
    n = requested if requested is not None else (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))


def child_seeds(master: int | None, count: int) -> list[np.random.SeedSequence]:
    """Independent seed sequences for ``count`` tasks, indexed by task number."""
    return np.random.SeedSequence(master).spawn(count)


def rng_for(seed) -> np.random.Generator:
    return np.random.default_rng(seed)
