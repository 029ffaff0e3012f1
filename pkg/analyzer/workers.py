"""Ordered parallel map over independent work chunks."""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Применить func к каждому элементу; порядок результатов совпадает с порядком входа.

    Слияние результатов не зависит от числа потоков.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(func, item) for item in items]
        return [future.result() for future in futures]


def chunks(count: int, size: int) -> List[slice]:
    """Разбить диапазон [0, count) на срезы длины size."""
    size = max(1, int(size))
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def map_rows(func: Callable[[np.ndarray], np.ndarray], rows: np.ndarray, threads: int = 1,
             chunk_size: int = 4096) -> np.ndarray:
    """Применить векторную func к блокам строк и склеить результат."""
    if rows.shape[0] == 0:
        return func(rows)
    parts = ordered_map(lambda part: func(rows[part]), chunks(rows.shape[0], chunk_size), threads)
    return np.concatenate(parts)

