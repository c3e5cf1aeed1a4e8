"""Order-preserving parallel map; results never depend on the worker count."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers():
    return os.cpu_count() or 1


def pmap(fn, items, workers=1, chunksize=16):
    """``list(map(fn, items))``, optionally across ``workers`` processes."""
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
