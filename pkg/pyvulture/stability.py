"""
pyvulture 稳定性模块

为网络客户端（NVD接口、判定服务）提供重试机制。

主要类：
- RetryStrategy: 重试策略枚举
- RetryConfig: 重试配置
- RetryManager: 重试管理器

默认的网络重试策略为指数退避：基础延迟1秒，倍数2，最多5次尝试，不加抖动。

使用示例：
    >>> from pyvulture.stability import RetryManager, network_retry_config
    >>> manager = RetryManager(network_retry_config())
    >>> payload = manager.execute(fetch_page, url)
"""

import random
import time
import logging
from typing import Any, Callable, Dict, Optional, Tuple, Type
from dataclasses import dataclass
from enum import Enum

from .exceptions import NetworkError, RateLimited

# 配置日志记录器
logger = logging.getLogger(__name__)


class RetryStrategy(Enum):
    """等待时间的增长方式"""

    FIXED = "fixed"
    EXPONENTIAL = "exponential"
    LINEAR = "linear"


@dataclass
class RetryConfig:
    """重试配置，max_attempts 包含首次调用"""

    max_attempts: int = 5
    base_delay: float = 1.0
    max_delay: float = 60.0
    backoff_factor: float = 2.0
    strategy: RetryStrategy = RetryStrategy.EXPONENTIAL
    jitter: bool = False
    retry_on: Tuple[Type[BaseException], ...] = (NetworkError, RateLimited)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be at least 1, got {self.max_attempts}")


def network_retry_config(max_attempts: int = 5, base_delay: float = 1.0, backoff_factor: float = 2.0) -> RetryConfig:
    """网络客户端使用的重试配置"""
    return RetryConfig(max_attempts=max_attempts, base_delay=base_delay, backoff_factor=backoff_factor)


class RetryManager:
    """
    重试管理器

    对 retry_on 中的异常按策略等待后重试，其他异常直接抛出；
    按函数名统计成功、失败与重试次数。
    """

    def __init__(self, config: Optional[RetryConfig] = None, sleep: Callable[[float], None] = time.sleep):
        """
        Args:
            config: 重试配置，默认 RetryConfig()
            sleep: 等待函数，测试中可替换
        """
        self.config = config or RetryConfig()
        self._sleep = sleep
        self._stats: Dict[str, Dict[str, int]] = {}

    def execute(self, func: Callable, *args, **kwargs) -> Any:
        """
        调用 func(*args, **kwargs)，失败时重试

        Raises:
            最后一次调用抛出的异常
        """
        name = getattr(func, "__name__", repr(func))
        stats = self._stats.setdefault(name, {"success": 0, "failure": 0, "retries": 0})
        attempts = self.config.max_attempts

        for attempt in range(attempts):
            try:
                value = func(*args, **kwargs)
            except self.config.retry_on as e:
                stats["failure"] += 1
                if attempt + 1 == attempts:
                    logger.error(f"{name} 在 {attempts} 次尝试后仍然失败: {e}")
                    raise
                delay = self._calculate_delay(attempt)
                logger.warning(f"{name} 第 {attempt + 1}/{attempts} 次失败 ({e})，{delay:.2f}s 后重试")
                self._sleep(delay)
                stats["retries"] += 1
            else:
                stats["success"] += 1
                return value
        raise AssertionError("unreachable")

    def _calculate_delay(self, attempt: int) -> float:
        """第 attempt 次（从0开始）失败后的等待秒数"""
        base = self.config.base_delay
        if self.config.strategy == RetryStrategy.FIXED:
            delay = base
        elif self.config.strategy == RetryStrategy.LINEAR:
            delay = base * (attempt + 1)
        else:
            delay = base * self.config.backoff_factor**attempt
        delay = min(delay, self.config.max_delay)
        if self.config.jitter:
            delay *= 1 + random.uniform(0.1, 0.3)
        return delay

    def get_stats(self) -> Dict[str, Dict[str, int]]:
        """各函数的调用统计"""
        return {name: dict(values) for name, values in self._stats.items()}
