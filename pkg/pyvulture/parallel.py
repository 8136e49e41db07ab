"""
pyvulture 并发执行模块

为数据库构建、补丁映射和漏洞检测提供统一的并发执行器，支持线程和进程两种模式。
无论工作者数量多少，map 的结果顺序始终与输入顺序一致，保证输出的确定性。

使用示例：
    >>> from pyvulture.parallel import ParallelExecutor
    >>> with ParallelExecutor(max_workers=4) as executor:
    ...     records = executor.map(build_version_records, repos)
"""

import logging
import time
from concurrent.futures import Executor, ThreadPoolExecutor, ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from .types import ExecutorType

# 配置日志记录器
logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ParallelExecutor:
    """
    有序并发执行器

    max_workers 为 1 时在当前线程内直接执行，不创建线程池。
    """

    def __init__(self, max_workers: int = 1, executor_type: str = "thread"):
        """
        初始化并行执行器

        Args:
            max_workers: 最大工作线程/进程数
            executor_type: 执行器类型，'thread' 或 'process'
        """
        if max_workers < 1:
            raise ValueError("max_workers must be >= 1")
        self.max_workers = max_workers
        self.executor_type = ExecutorType(executor_type.lower())
        self._executor: Optional[Executor] = None

    def _create_executor(self) -> Executor:
        """创建执行器实例"""
        if self.executor_type == ExecutorType.THREAD:
            return ThreadPoolExecutor(max_workers=self.max_workers)
        return ProcessPoolExecutor(max_workers=self.max_workers)

    @property
    def inline(self) -> bool:
        return self.max_workers == 1

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """
        并发执行 func 并按输入顺序返回结果

        任一任务抛出的异常会原样传播给调用者。
        """
        materialized: Sequence[T] = list(items)
        if not materialized:
            return []

        start_time = time.time()
        if self.inline or len(materialized) == 1:
            results = [func(item) for item in materialized]
        else:
            if self._executor is None:
                self._executor = self._create_executor()
            results = list(self._executor.map(func, materialized))

        logger.debug(
            f"{getattr(func, '__name__', 'task')}: {len(materialized)} 个任务完成，"
            f"workers={self.max_workers}，耗时 {time.time() - start_time:.3f}秒"
        )
        return results

    def shutdown(self, wait: bool = True):
        """关闭执行器"""
        if self._executor is not None:
            self._executor.shutdown(wait=wait)
            self._executor = None

    def __enter__(self) -> "ParallelExecutor":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.shutdown()
