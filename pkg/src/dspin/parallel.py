"""Worker-pool helper; ``DSPIN_THREADS`` caps the worker count."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigInvalid


def worker_count(default=4):
    raw = os.environ.get("DSPIN_THREADS")
    cpus = os.cpu_count() or 1
    if raw is None or raw == "":
        return max(1, min(default, cpus))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigInvalid(f"DSPIN_THREADS must be a positive integer, got {raw!r}", key="DSPIN_THREADS") from None
    if n < 1:
        raise ConfigInvalid("DSPIN_THREADS must be >= 1", key="DSPIN_THREADS")
    return n


def pmap(fn, items):
    """Ordered map over ``items`` on at most ``worker_count()`` threads."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
