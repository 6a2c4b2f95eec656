import os
from concurrent.futures import ThreadPoolExecutor


def default_workers() -> int:
    env = os.environ.get("RELAYNET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items, workers=None):
    """``list(map(fn, items))`` on a thread pool; result order follows ``items``."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
