"""
This module provides functions for evaluating independent jobs concurrently
"""

from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from typing import Callable, Dict, Iterable, List, Optional, Tuple, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def _concurrent_map(
    fun: Callable[[T], R],
    iterable: Iterable[T],
    workers: int = 1,
) -> List[R]:
    """
    Apply fun to every item, using up to ``workers`` threads

    Results are returned in the order of the input items, whatever order the
    workers finish in, so callers see the same list for any worker count.
    """
    items = list(iterable)
    if workers <= 1 or len(items) <= 1:
        return [fun(item) for item in items]

    # Jobs are submitted in batches so that no more than a handful of them
    # wait in the executor queue at a time. The 1.5 factor keeps jobs > workers
    # so a worker never idles while the next job is being submitted.
    low_water_mark = int(workers * 1.5)
    iterator = iter(enumerate(items))
    results: Dict[int, R] = {}

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures: Dict[Future, int] = {}

        def submit_item() -> None:
            entry: Optional[Tuple[int, T]] = next(iterator, None)
            if entry is not None:
                index, item = entry
                futures[executor.submit(fun, item)] = index

        def fill_futures() -> None:
            for _ in range(low_water_mark - len(futures)):
                submit_item()

        fill_futures()

        while futures:
            done, _ = wait(list(futures), return_when=FIRST_COMPLETED)
            for future in done:
                results[futures.pop(future)] = future.result()

            fill_futures()

    return [results[index] for index in range(len(items))]
