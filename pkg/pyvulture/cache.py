"""响应录制/回放缓存模块

网络客户端（NVD接口、判定服务）把请求映射为md5键，响应体以JSON文件形式存放在录制目录中。
测试和离线运行只读取已录制的响应，从不发起网络请求。
"""

import json
import hashlib
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .utils import ensure_directory

logger = logging.getLogger(__name__)


class RecordMode(Enum):
    """录制模式"""

    OFF = "off"  # 不读写录制目录
    RECORD = "record"  # 发起请求并保存响应
    REPLAY = "replay"  # 仅读取已录制的响应


class ResponseCache:
    """响应缓存"""

    def __init__(self, cache_dir: Optional[Union[str, Path]] = None, mode: Union[str, RecordMode] = RecordMode.OFF):
        """
        初始化响应缓存

        Args:
            cache_dir: 录制目录
            mode: 录制模式
        """
        self.mode = RecordMode(mode) if not isinstance(mode, RecordMode) else mode
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.mode != RecordMode.OFF and self.cache_dir is None:
            raise ValueError("cache_dir is required when recording or replaying")
        self.memory_cache: Dict[str, Any] = {}

    @staticmethod
    def request_key(method: str, url: str, params: Optional[Dict[str, Any]] = None, body: Any = None) -> str:
        """生成请求的缓存键"""
        canonical = json.dumps(
            {"method": method.upper(), "url": url, "params": params or {}, "body": body},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.md5(canonical.encode("utf-8")).hexdigest()

    def _get_cache_path(self, key: str) -> Path:
        assert self.cache_dir is not None
        return self.cache_dir / f"{key}.json"

    @property
    def replaying(self) -> bool:
        return self.mode == RecordMode.REPLAY

    def get(self, key: str) -> Optional[Any]:
        """
        获取录制的响应

        Returns:
            响应体，如果不存在则返回None
        """
        if key in self.memory_cache:
            return self.memory_cache[key]
        if self.mode == RecordMode.OFF:
            return None

        cache_path = self._get_cache_path(key)
        if not cache_path.exists():
            return None
        try:
            with open(cache_path, "r", encoding="utf-8") as f:
                value = json.load(f)["response"]
        except (OSError, ValueError, KeyError) as e:
            logger.warning(f"录制文件损坏 {cache_path}: {e}")
            return None
        self.memory_cache[key] = value
        logger.debug(f"从录制文件回放: {key}")
        return value

    def set(self, key: str, value: Any, request: Optional[Dict[str, Any]] = None) -> bool:
        """保存响应，仅在录制模式下写入文件"""
        self.memory_cache[key] = value
        if self.mode != RecordMode.RECORD:
            return False
        try:
            ensure_directory(self.cache_dir)  # type: ignore[arg-type]
            with open(self._get_cache_path(key), "w", encoding="utf-8") as f:
                json.dump({"request": request or {}, "response": value}, f, ensure_ascii=False, indent=2, sort_keys=True)
            logger.debug(f"响应已录制: {key}")
            return True
        except OSError as e:
            logger.error(f"录制响应失败 {key}: {e}")
            return False
