"""Seed derivation and worker-count plumbing.

All randomness flows from one root seed. Independent work units (trees,
folds, grid candidates, permutation repeats) get their own generator whose
seed is a hash of ``(root, *keys)``, so results do not depend on the order
or the number of workers that execute them.
"""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEED = 42
WORKERS_ENV = "ICUCET_WORKERS"


def derive_seed(root, *keys):
    """Return a 63-bit seed derived from ``root`` and any hashable-by-str keys."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root)).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(str(k).encode())
    return int.from_bytes(h.digest(), "little") >> 1


def rng_for(root, *keys):
    return np.random.default_rng(derive_seed(root, *keys))


def worker_count(n_jobs=None):
    if n_jobs is None:
        n_jobs = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(n_jobs))


def parallel_map(fn, items, n_jobs=None):
    """Ordered map over ``items``; runs on a thread pool when more than one worker."""
    items = list(items)
    n = worker_count(n_jobs)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
