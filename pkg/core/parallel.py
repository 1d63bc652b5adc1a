"""
Parallel Map
Ordered thread-pool map capped by HOMSOL_THREADS
"""

import concurrent.futures
from typing import Callable, Iterable, List, Optional, TypeVar

from app.config import get_thread_count

T = TypeVar("T")
R = TypeVar("R")


def pmap(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply func to every item; results keep the input order"""
    items = list(items)
    workers = min(max_workers or get_thread_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def chunked(count: int, size: int) -> List[slice]:
    """Consecutive slices covering range(count)"""
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]
