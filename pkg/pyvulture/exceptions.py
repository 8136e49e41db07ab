"""自定义异常类模块"""

import logging
from functools import wraps
from typing import Optional, Dict, Any, List

logger = logging.getLogger(__name__)


class VultureError(Exception):
    """pyvulture基础异常类"""

    # 构造时记录日志使用的级别，可恢复的告警类异常覆盖为WARNING/DEBUG
    log_level = logging.ERROR

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        初始化异常

        Args:
            message: 错误消息
            error_code: 错误代码
            details: 错误详情
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

        # 记录错误日志
        logger.log(self.log_level, f"{type(self).__name__}: {message} (Code: {error_code})")
        if details:
            logger.log(self.log_level, f"Error details: {details}")


# ---------------------------------------------------------------- 代码模型


class CodeModelError(VultureError):
    """源码解析异常基类"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.path = path
        self.line = line
        if path:
            self.details["path"] = path
        if line is not None:
            self.details["line"] = line


class UnbalancedBraces(CodeModelError):
    """函数体花括号未闭合"""

    log_level = logging.WARNING

    def __init__(self, path: str, line: int, **kwargs):
        super().__init__(
            f"Unbalanced braces in {path} starting at line {line}",
            path=path,
            line=line,
            error_code="UNBALANCED_BRACES",
            **kwargs,
        )


class UnclassifiedStatement(CodeModelError):
    """语句无法被任何模式识别"""

    log_level = logging.DEBUG

    def __init__(self, statement: str, **kwargs):
        super().__init__(f"Unclassified statement: {statement!r}", error_code="UNCLASSIFIED_STATEMENT", **kwargs)
        self.statement = statement
        self.details["statement"] = statement


class AlgorithmMismatch(CodeModelError):
    """比较不同算法族的摘要"""

    log_level = logging.DEBUG

    def __init__(self, left: str, right: str, **kwargs):
        super().__init__(f"Cannot compare {left} digest with {right} digest", error_code="ALGORITHM_MISMATCH", **kwargs)
        self.details.update({"left": left, "right": right})


# ---------------------------------------------------------------- 数据库


class DatabaseError(VultureError):
    """数据库构建与持久化异常基类"""


class SchemaVersionMismatch(DatabaseError):
    """段文件的schema版本不受支持"""

    def __init__(self, path: str, found: Any, expected: int, **kwargs):
        super().__init__(
            f"{path}: schema_version {found!r} is not supported (expected {expected})",
            error_code="SCHEMA_VERSION_MISMATCH",
            details={"path": path, "found": found, "expected": expected},
            **kwargs,
        )


class DatabaseIOError(DatabaseError):
    """段文件读写失败"""

    def __init__(self, message: str, path: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="DATABASE_IO_ERROR", **kwargs)
        self.path = path
        if path:
            self.details["path"] = path


class RepoUnavailable(DatabaseError):
    """仓库无法打开"""

    def __init__(self, message: str, location: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="REPO_UNAVAILABLE", **kwargs)
        self.location = location
        if location:
            self.details["location"] = location


class TagCheckoutFailed(DatabaseError):
    """无法读取某个标签下的源码"""

    log_level = logging.WARNING

    def __init__(self, tag: str, reason: str = "", **kwargs):
        super().__init__(f"Failed to read tag {tag}: {reason}", error_code="TAG_CHECKOUT_FAILED", **kwargs)
        self.tag = tag
        self.details["tag"] = tag


# ---------------------------------------------------------------- 补丁映射


class MappingError(VultureError):
    """CVE到补丁提交映射异常基类"""

    log_level = logging.WARNING


class UnparseableCpe(MappingError):
    """CPE字符串无法解析"""

    def __init__(self, cve_id: str, cpe: Any = None, **kwargs):
        super().__init__(f"Unparseable CPE in {cve_id}: {cpe!r}", error_code="UNPARSEABLE_CPE", **kwargs)
        self.cve_id = cve_id
        self.details.update({"cve_id": cve_id, "cpe": cpe})


class EmptyRange(MappingError):
    """时间窗口内没有提交"""

    def __init__(self, message: str = "No commits in the search window", **kwargs):
        super().__init__(message, error_code="EMPTY_RANGE", **kwargs)


class NoElements(MappingError):
    """描述中未解析出任何漏洞元素"""

    def __init__(self, cve_id: str, **kwargs):
        super().__init__(f"{cve_id}: no vulnerable elements parsed", error_code="NO_ELEMENTS", **kwargs)
        self.cve_id = cve_id
        self.details["cve_id"] = cve_id


class DiffFailed(MappingError):
    """差异计算失败"""

    def __init__(self, message: str, commits: Optional[List[str]] = None, **kwargs):
        super().__init__(message, error_code="DIFF_FAILED", **kwargs)
        self.commits = commits or []
        if commits:
            self.details["commits"] = commits


class OracleUnavailable(VultureError):
    """外部判定服务不可用"""

    log_level = logging.WARNING

    def __init__(self, message: str, endpoint: Optional[str] = None, **kwargs):
        super().__init__(message, error_code="ORACLE_UNAVAILABLE", **kwargs)
        self.endpoint = endpoint
        if endpoint:
            self.details["endpoint"] = endpoint


# ---------------------------------------------------------------- 网络客户端


class ClientError(VultureError):
    """外部客户端异常基类"""

    def __init__(self, message: str, url: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.url = url
        if url:
            self.details["url"] = url


class NetworkError(ClientError):
    """网络请求失败"""

    log_level = logging.WARNING

    def __init__(self, message: str, url: Optional[str] = None, **kwargs):
        super().__init__(message, url, error_code="NETWORK_ERROR", **kwargs)


class RateLimited(ClientError):
    """请求被限流"""

    log_level = logging.WARNING

    def __init__(self, message: str, url: Optional[str] = None, status: Optional[int] = None, **kwargs):
        super().__init__(message, url, error_code="RATE_LIMITED", **kwargs)
        self.status = status
        if status is not None:
            self.details["status"] = status


class OfflineModeError(ClientError):
    """离线模式下请求网络"""

    def __init__(self, message: str, url: Optional[str] = None, **kwargs):
        super().__init__(message, url, error_code="OFFLINE_MODE", **kwargs)


# ---------------------------------------------------------------- 漏洞检测


class DetectionError(VultureError):
    """漏洞检测异常基类"""

    log_level = logging.WARNING


class OrphanHunk(DetectionError):
    """差异片段不属于任何代码片段"""

    def __init__(self, path: str, line: int, text: str = "", **kwargs):
        super().__init__(f"Hunk at {path}:{line} maps to no snippet", error_code="ORPHAN_HUNK", **kwargs)
        self.path = path
        self.line = line
        self.text = text
        self.details.update({"path": path, "line": line})


class UnpairedChunk(DetectionError):
    """补丁块在目标差异中找不到对应块"""

    log_level = logging.DEBUG

    def __init__(self, chunk_id: str, **kwargs):
        super().__init__(f"Chunk {chunk_id} has no counterpart", error_code="UNPAIRED_CHUNK", **kwargs)
        self.chunk_id = chunk_id
        self.details["chunk_id"] = chunk_id


class ConfigurationError(VultureError):
    """配置异常"""

    def __init__(self, message: str, config_key: Optional[str] = None, **kwargs):
        """
        初始化配置异常

        Args:
            message: 错误消息
            config_key: 配置键
            **kwargs: 其他参数
        """
        super().__init__(message, error_code="CONFIGURATION_ERROR", **kwargs)
        self.config_key = config_key
        if config_key:
            self.details["config_key"] = config_key


def handle_exception(func):
    """异常处理装饰器，将未知异常包装为VultureError"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except VultureError:
            # 重新抛出已知异常
            raise
        except Exception as e:
            logger.error(f"Unexpected error in {func.__name__}: {e}")
            raise VultureError(
                f"Unexpected error in {func.__name__}: {str(e)}",
                error_code="UNEXPECTED_ERROR",
                details={"original_error": str(e), "function": func.__name__},
            ) from e

    return wrapper
