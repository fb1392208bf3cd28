"""分块并行工具.

按索引区间切分任务并在线程池中执行，结果按块顺序返回,
因此合并结果与 worker 数无关.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def default_workers() -> int:
    """默认 worker 数（可用 CPU 数）."""
    return os.cpu_count() or 1


def block_ranges(total: int, block_size: int) -> List[Tuple[int, int]]:
    """把 [0, total) 切分为若干连续区间.

    Args:
        total: 总长度.
        block_size: 每块长度.

    Returns:
        (start, stop) 列表.
    """
    block_size = max(1, int(block_size))
    return [(start, min(start + block_size, total)) for start in range(0, total, block_size)]


def map_blocks(
    func: Callable[[int, int], T],
    total: int,
    block_size: int,
    workers: Optional[int] = None,
) -> List[T]:
    """对每个区间调用 func(start, stop)，按区间顺序返回结果.

    Args:
        func: 处理单个区间的函数.
        total: 总长度.
        block_size: 每块长度.
        workers: 线程数，None 表示使用默认值.

    Returns:
        与区间顺序一致的结果列表.
    """
    ranges = block_ranges(total, block_size)
    workers = workers or default_workers()
    if workers <= 1 or len(ranges) <= 1:
        return [func(start, stop) for start, stop in ranges]

    logger.debug(f"分块并行: {len(ranges)} 块, workers={workers}")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda r: func(*r), ranges))
