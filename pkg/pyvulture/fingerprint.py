"""函数指纹模块：TLSH模糊摘要与距离"""

import hashlib
import logging
import re
from dataclasses import dataclass

import tlsh

from .exceptions import AlgorithmMismatch

logger = logging.getLogger(__name__)

TLSH = "TLSH"
EXACT = "ExactHash"

# TLSH 需要的最小输入长度（字节）
MIN_FUZZY_LENGTH = 50
# ExactHash 不相等时的距离
INFINITE_DISTANCE = 1 << 30

_WHITESPACE_RE = re.compile(r"\s+")
_TNULL = {"", "TNULL"}


@dataclass(frozen=True, order=True)
class FuzzyDigest:
    """模糊摘要，TLSH 为70位十六进制，过短的输入退化为 sha256"""

    algorithm: str
    hex: str

    def __str__(self) -> str:
        if self.algorithm == EXACT:
            return f"sha256:{self.hex}"
        return self.hex

    @property
    def is_fuzzy(self) -> bool:
        return self.algorithm == TLSH

    @classmethod
    def parse(cls, text: str) -> "FuzzyDigest":
        """从持久化字符串还原摘要"""
        if text.startswith("sha256:"):
            return cls(EXACT, text[len("sha256:"):])
        if text.startswith("T1") and len(text) == 72:
            text = text[2:]
        return cls(TLSH, text)


def digest_input(normalized_body: str) -> bytes:
    """摘要的输入：去掉全部空白的规范化代码"""
    return _WHITESPACE_RE.sub("", normalized_body).encode("utf-8")


def _tlsh_hex(data: bytes) -> str:
    value = tlsh.hash(data)
    if value in _TNULL and hasattr(tlsh, "forcehash"):
        # 输入变化太少时 tlsh.hash 返回 TNULL
        value = tlsh.forcehash(data)
    if value in _TNULL:
        return ""
    return value[2:] if value.startswith("T1") else value


def digest(normalized_body: str) -> FuzzyDigest:
    """
    计算规范化函数体的模糊摘要

    Args:
        normalized_body: 规范化后的代码

    Returns:
        FuzzyDigest: 输入不少于50字节时为TLSH摘要，否则为ExactHash
    """
    data = digest_input(normalized_body)
    if len(data) >= MIN_FUZZY_LENGTH:
        hex_value = _tlsh_hex(data)
        if hex_value:
            return FuzzyDigest(TLSH, hex_value)
        logger.debug("TLSH 无法处理该输入，退化为 sha256")
    return FuzzyDigest(EXACT, hashlib.sha256(data).hexdigest())


def comparable(a: FuzzyDigest, b: FuzzyDigest) -> bool:
    return a.algorithm == b.algorithm


def distance(a: FuzzyDigest, b: FuzzyDigest) -> int:
    """
    两个摘要间的距离

    Raises:
        AlgorithmMismatch: 比较TLSH与ExactHash时
    """
    if a.algorithm != b.algorithm:
        raise AlgorithmMismatch(a.algorithm, b.algorithm)
    if a.hex == b.hex:
        return 0
    if a.algorithm == EXACT:
        return INFINITE_DISTANCE
    return tlsh.diff(a.hex, b.hex)
