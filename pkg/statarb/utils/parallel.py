import concurrent.futures
import logging
from typing import Callable, Dict, Iterable, List, TypeVar

log = logging.getLogger(__name__)

TItem = TypeVar('TItem')
TResult = TypeVar('TResult')


def ordered_map(func: Callable[[TItem], TResult], items: Iterable[TItem], workers: int = 1) -> List[TResult]:
    """Map `func` over `items` on a thread pool and return results in input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    results: Dict[int, TResult] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        task = {executor.submit(func, item): index for index, item in enumerate(items)}
        for future in concurrent.futures.as_completed(task):
            index = task[future]
            try:
                results[index] = future.result()
            except Exception as exc:
                log.error('%r failed: %s', items[index], exc)
                raise
    return [results[index] for index in range(len(items))]
