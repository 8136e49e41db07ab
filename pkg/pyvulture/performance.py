"""性能监控模块"""

import time
import logging
from contextlib import contextmanager
from functools import wraps
from typing import Any, Callable, Dict, Iterator

import psutil

from .utils import format_bytes

logger = logging.getLogger(__name__)


def _rss_bytes() -> int:
    try:
        return psutil.Process().memory_info().rss
    except (psutil.Error, OSError):
        return 0


@contextmanager
def performance_context(operation_name: str) -> Iterator[Dict[str, Any]]:
    """
    性能监控上下文管理器

    退出时记录耗时与常驻内存变化，产出的字典在退出后包含 duration 与 rss_delta。
    """
    stats: Dict[str, Any] = {"operation": operation_name}
    start_time = time.time()
    start_rss = _rss_bytes()
    logger.debug(f"开始执行: {operation_name}")
    try:
        yield stats
    finally:
        stats["duration"] = time.time() - start_time
        stats["rss_delta"] = _rss_bytes() - start_rss
        logger.info(
            f"{operation_name} 完成，耗时: {stats['duration']:.3f}秒，"
            f"内存变化: {format_bytes(stats['rss_delta'])}"
        )


def monitor_performance(func: Callable) -> Callable:
    """性能监控装饰器"""

    @wraps(func)
    def wrapper(*args, **kwargs) -> Any:
        start_time = time.time()
        try:
            return func(*args, **kwargs)
        finally:
            logger.debug(f"{func.__name__} 执行时间: {time.time() - start_time:.3f}秒")

    return wrapper
