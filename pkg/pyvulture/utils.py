"""
pyvulture 工具函数模块

主要功能：
- C/C++ 源文件遍历
- 时间戳解析与格式化
- 数据格式化与目录处理
- 并查集

使用示例：
    >>> from pyvulture.utils import iter_source_files
    >>> files = list(iter_source_files("third_party/zlib"))
"""

import os
import re
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

# 配置日志记录器
logger = logging.getLogger(__name__)

# 参与指纹和扫描的源文件后缀
SOURCE_SUFFIXES = (".c", ".h", ".cc", ".cpp", ".cxx", ".hpp", ".hh")
# 跳过的目录
SKIPPED_DIRS = {".git", ".hg", ".svn", "__pycache__", "node_modules"}


def is_source_file(path: Union[str, Path]) -> bool:
    return str(path).lower().endswith(SOURCE_SUFFIXES)


def iter_source_files(root: Union[str, Path]) -> Iterator[Tuple[str, Path]]:
    """
    按相对路径排序遍历目录中的C/C++源文件

    Yields:
        (以 / 分隔的相对路径, 绝对路径)
    """
    root_path = Path(root)
    found = []
    for dirpath, dirnames, filenames in os.walk(root_path):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIPPED_DIRS)
        for filename in filenames:
            if is_source_file(filename):
                full = Path(dirpath) / filename
                found.append((full.relative_to(root_path).as_posix(), full))
    yield from sorted(found)


def read_text(path: Union[str, Path]) -> str:
    """读取源文件，非UTF-8字节按替换字符处理"""
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        return f.read()


_ISO_RE = re.compile(r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?$")


def parse_timestamp(value: Union[str, int, float, datetime]) -> datetime:
    """解析时间戳（epoch秒或RFC3339字符串），返回UTC时间"""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)):
        dt = datetime.fromtimestamp(value, tz=timezone.utc)
    else:
        text = value.strip()
        if text.isdigit():
            dt = datetime.fromtimestamp(int(text), tz=timezone.utc)
        elif _ISO_RE.match(text):
            dt = datetime.fromisoformat(text.replace("Z", "+00:00").replace(" ", "T"))
        elif re.match(r"^\d{4}-\d{2}-\d{2}$", text):
            dt = datetime.fromisoformat(text)
        else:
            raise ValueError(f"Unrecognized timestamp: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    """RFC3339 秒级精度，UTC，以 Z 结尾"""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def format_bytes(bytes_value: float) -> str:
    """格式化字节数为可读格式"""
    for unit in ["B", "KB", "MB", "GB", "TB"]:
        if abs(bytes_value) < 1024.0:
            return f"{bytes_value:.1f} {unit}"
        bytes_value /= 1024.0
    return f"{bytes_value:.1f} PB"


def ensure_directory(path: Union[str, Path]) -> Path:
    """确保目录存在"""
    target = Path(path)
    target.mkdir(parents=True, exist_ok=True)
    return target


def basename(path: str) -> str:
    """取路径的文件名部分，兼容 / 与 \\ 分隔符"""
    return re.split(r"[\\/]", path)[-1]


class DisjointSet:
    """
    按下标操作的并查集（路径压缩 + 按秩合并）

    使用示例：
        >>> ds = DisjointSet(3)
        >>> ds.merge(0, 2)
        >>> ds.find(0) == ds.find(2)
        True
    """

    def __init__(self, size: int):
        if size < 0:
            raise ValueError("size must be non-negative")
        self._parent = list(range(size))
        self._rank = [0] * size

    def __len__(self) -> int:
        return len(self._parent)

    def find(self, x: int) -> int:
        root = x
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[x] != root:
            self._parent[x], x = root, self._parent[x]
        return root

    def merge(self, x: int, y: int):
        x_root, y_root = self.find(x), self.find(y)
        if x_root == y_root:
            return
        if self._rank[x_root] < self._rank[y_root]:
            x_root, y_root = y_root, x_root
        self._parent[y_root] = x_root
        if self._rank[x_root] == self._rank[y_root]:
            self._rank[x_root] += 1

    def groups(self) -> List[List[int]]:
        """按最小元素排序的分组，组内元素升序"""
        by_root: Dict[int, List[int]] = {}
        for i in range(len(self._parent)):
            by_root.setdefault(self.find(i), []).append(i)
        return sorted(by_root.values(), key=lambda g: g[0])
