"""版本号比较

标签前缀（如 ``wireshark-1.8.7``、``v1.2``）在第一个数字前截断；版本段按 ``.``、``-``、``_``
切分，数字段按数值比较并排在字母段之前，较短的前缀排在前面。
"""

import re
from typing import Iterable, List, Tuple

_PREFIX_RE = re.compile(r"^[^\d]*(?=\d)")
_SPLIT_RE = re.compile(r"[.\-_+]")

VersionKey = Tuple[Tuple[int, object], ...]


def strip_prefix(tag: str) -> str:
    """去掉标签中第一个数字之前的部分；不含数字的标签原样返回"""
    return _PREFIX_RE.sub("", tag.strip(), count=1)


def version_key(tag: str) -> VersionKey:
    """排序键，数字段为 (0, int)，其余为 (1, str)"""
    parts = []
    for segment in _SPLIT_RE.split(strip_prefix(tag)):
        if not segment:
            continue
        # 形如 "1rc2" 的段拆成数字与字母
        for piece in re.findall(r"\d+|[^\d]+", segment):
            parts.append((0, int(piece)) if piece.isdigit() else (1, piece.lower()))
    return tuple(parts)


def compare_versions(a: str, b: str) -> int:
    ka, kb = version_key(a), version_key(b)
    return (ka > kb) - (ka < kb)


def sort_versions(tags: Iterable[str]) -> List[str]:
    """按版本顺序排序，键相同时按原始字符串排序保证稳定"""
    return sorted(tags, key=lambda t: (version_key(t), t))


