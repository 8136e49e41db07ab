"""类型定义模块"""

from typing import Any, Dict, Mapping
from enum import Enum


class SnippetKind(Enum):
    """代码片段类型"""

    FUNCTION = "Function"
    GLOBAL_DECL = "GlobalDecl"


class ReuseGroup(Enum):
    """复用分组，按优先级 G3 > G2 > G4 > G1"""

    G1 = "G1"  # 安全复用
    G2 = "G2"  # 存在漏洞的全局声明复用
    G3 = "G3"  # 精确的漏洞复用
    G4 = "G4"  # 定制复用

    @property
    def precedence(self) -> int:
        return _GROUP_PRECEDENCE[self]


_GROUP_PRECEDENCE = {ReuseGroup.G3: 4, ReuseGroup.G2: 3, ReuseGroup.G4: 2, ReuseGroup.G1: 1}


class Verdict(Enum):
    """检测结论"""

    SECURE = "Secure"
    PATCHED = "Patched"
    VULNERABLE = "Vulnerable"
    UNANALYZED = "Unanalyzed"


class RepoMode(Enum):
    """仓库访问模式"""

    SUBPROCESS = "subprocess"
    FIXTURE = "fixture"


class ExecutorType(Enum):
    """执行器类型枚举"""

    THREAD = "thread"
    PROCESS = "process"


class LogLevel(Enum):
    """日志级别枚举"""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


# 类型别名
SourceFiles = Mapping[str, str]  # 路径 -> 源码
RepoMetadata = Dict[str, Any]
