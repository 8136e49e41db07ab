"""
pyvulture 判定服务模块

补丁映射中的两个判断步骤通过可注入的接口完成：
- DescriptionOracle: 从漏洞描述中解析漏洞元素（文件、函数、变量）
- RelevanceOracle: 判断候选提交与CVE是否相关

主要类：
- RuleBasedOracle: 确定性的规则实现，也是所有失败情况下的后备
- ChatCompletionOracle: 访问兼容 chat-completion 接口的外部服务
- FallbackOracle: 主服务不可用时自动切换到规则实现

使用示例：
    >>> oracle = RuleBasedOracle()
    >>> oracle.parse("The foo_bar function in src/x.c ...").functions
    frozenset({'foo_bar'})
"""

import abc
import json
import re
import threading
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional

import requests

from .cache import ResponseCache
from .exceptions import OracleUnavailable
from .utils import basename

# 配置日志记录器
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VulnerableElements:
    """漏洞描述中的元素集合"""

    files: FrozenSet[str] = frozenset()
    functions: FrozenSet[str] = frozenset()
    variables: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, files: Iterable[str] = (), functions: Iterable[str] = (), variables: Iterable[str] = ()) -> "VulnerableElements":
        return cls(frozenset(files), frozenset(functions), frozenset(variables))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VulnerableElements":
        return cls.of(data.get("files") or (), data.get("functions") or (), data.get("variables") or ())

    def is_empty(self) -> bool:
        return not (self.files or self.functions or self.variables)

    @property
    def identifiers(self) -> FrozenSet[str]:
        return self.functions | self.variables

    def to_dict(self) -> Dict[str, List[str]]:
        return {
            "files": sorted(self.files),
            "functions": sorted(self.functions),
            "variables": sorted(self.variables),
        }


@dataclass(frozen=True)
class OracleRequest:
    """相关性判断请求"""

    cve_description: str
    commit_message: str
    modified_code: str = ""
    cve_id: str = ""
    functions: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class OracleResponse:
    """相关性判断结果"""

    relevant: bool
    rationale: str = ""


class DescriptionOracle(abc.ABC):
    @abc.abstractmethod
    def parse(self, description: str) -> VulnerableElements:
        """解析漏洞元素"""


class RelevanceOracle(abc.ABC):
    @abc.abstractmethod
    def judge(self, request: OracleRequest) -> OracleResponse:
        """判断提交是否为该CVE的补丁"""


# ---------------------------------------------------------------- 规则实现

_FILE_RE = re.compile(r"(?<![\w.])([\w\-./]+\.(?:c|h|cc|cpp))\b", re.IGNORECASE)
_FUNCTION_BEFORE_RE = re.compile(r"\b([A-Za-z_]\w*)\s+functions?\b")
_FUNCTION_LIST_RE = re.compile(r"\b([A-Za-z_]\w*)\s*,?\s+(?:and|or)\s+[A-Za-z_]\w*\s+functions\b")
_FUNCTION_CALL_RE = re.compile(r"\b([A-Za-z_]\w*)\s*\(\)")
_VARIABLE_BEFORE_RE = re.compile(r"\b([A-Za-z_]\w*)\s+(?:variable|field|member|parameter|argument|array|buffer)s?\b")
_VARIABLE_AFTER_RE = re.compile(r"\bvariables?\s+([A-Za-z_]\w*)")
_SECURITY_RE = re.compile(r"\b(fix\w*|overflow\w*|cve|security|vulnerab\w*|dos)\b", re.IGNORECASE)

STOP_WORDS = frozenset(
    """
    a an the this that these those its their his her our your my any some each every all no not
    and or but of in on at to for from by with via into onto over under within without through
    is are was were be been being has have had do does did can could may might will would should
    same other another following affected vulnerable certain specific various multiple several
    internal external main new old first last one two three many more most such which when where
    callback handler helper library function functions variable variables static global local
    long large small big crafted malformed invalid unspecified unknown remote local user input
    output stack heap length size null pointer integer string memory data value values type
    """.split()
)


def _keep(candidates: Iterable[str]) -> FrozenSet[str]:
    return frozenset(c for c in candidates if c.lower() not in STOP_WORDS and not c.isdigit())


class RuleBasedOracle(DescriptionOracle, RelevanceOracle):
    """
    确定性规则判定

    解析规则：
    - 以 .c/.h/.cc/.cpp 结尾的记号作为文件（取文件名部分）
    - 紧接在 "function"/"functions" 之前或后跟 "()" 的标识符作为函数
    - 紧接在 variable/field/member/parameter/argument/array/buffer 之前，或 "variable" 之后的标识符作为变量

    相关性规则：提交信息包含CVE编号，或同时包含漏洞函数名与安全关键词
    （fix、overflow、CVE、security、vulnerability、DoS）。
    """

    def parse(self, description: str) -> VulnerableElements:
        text = description or ""
        files = {basename(m) for m in _FILE_RE.findall(text)}
        functions = set(_FUNCTION_BEFORE_RE.findall(text))
        functions.update(_FUNCTION_LIST_RE.findall(text))
        functions.update(_FUNCTION_CALL_RE.findall(text))
        variables = set(_VARIABLE_BEFORE_RE.findall(text)) | set(_VARIABLE_AFTER_RE.findall(text))
        elements = VulnerableElements(frozenset(files), _keep(functions), _keep(variables) - _keep(functions))
        logger.debug(f"规则解析结果: {elements.to_dict()}")
        return elements

    def judge(self, request: OracleRequest) -> OracleResponse:
        message = request.commit_message or ""
        if request.cve_id and request.cve_id.lower() in message.lower():
            return OracleResponse(True, f"commit message references {request.cve_id}")
        keyword = _SECURITY_RE.search(message)
        if keyword:
            for name in sorted(request.functions):
                if re.search(r"\b" + re.escape(name) + r"\b", message):
                    return OracleResponse(True, f"message names {name} with keyword {keyword.group(0)!r}")
        return OracleResponse(False, "no CVE id, or no vulnerable function with a security keyword")


# ---------------------------------------------------------------- 外部服务

PARSE_PROMPT = (
    "Extract the vulnerable source files, functions and variables named in this CVE description. "
    'Answer with JSON only: {"files": [...], "functions": [...], "variables": [...]}.'
)
JUDGE_PROMPT = (
    "Decide whether the commit fixes the vulnerability. "
    'Answer with JSON only: {"relevant": true|false, "rationale": "..."}.'
)


def _extract_json(content: str) -> Dict[str, Any]:
    start, end = content.find("{"), content.rfind("}")
    if start < 0 or end < start:
        raise ValueError("no JSON object in completion")
    return json.loads(content[start : end + 1])


class ChatCompletionOracle(DescriptionOracle, RelevanceOracle):
    """
    兼容 OpenAI chat-completion 接口的判定服务

    请求与响应经过 ResponseCache 录制/回放；离线模式只使用录制的响应。任何失败都抛出
    OracleUnavailable，由调用方回退到规则实现。会话内部串行化，可被多个线程共享。
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        cache: Optional[ResponseCache] = None,
        offline: bool = False,
        session: Optional[requests.Session] = None,
    ):
        if not endpoint or not model:
            raise OracleUnavailable("Oracle endpoint and model must both be configured", endpoint=endpoint)
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.cache = cache or ResponseCache()
        self.offline = offline
        self._session = session or requests.Session()
        self._lock = threading.Lock()

    def _complete(self, system_prompt: str, user_content: str) -> Dict[str, Any]:
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_content},
            ],
        }
        key = ResponseCache.request_key("POST", self.endpoint, body=body)
        with self._lock:
            payload = self.cache.get(key)
            if payload is None:
                if self.offline or self.cache.replaying:
                    raise OracleUnavailable("No recorded oracle response in offline mode", endpoint=self.endpoint)
                headers = {"Content-Type": "application/json"}
                if self.api_key:
                    headers["Authorization"] = f"Bearer {self.api_key}"
                try:
                    response = self._session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
                    response.raise_for_status()
                    payload = response.json()
                except (requests.RequestException, ValueError) as e:
                    raise OracleUnavailable(f"Oracle request failed: {e}", endpoint=self.endpoint) from e
                self.cache.set(key, payload, request=body)
        try:
            return _extract_json(payload["choices"][0]["message"]["content"])
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise OracleUnavailable(f"Unusable oracle completion: {e}", endpoint=self.endpoint) from e

    def parse(self, description: str) -> VulnerableElements:
        data = self._complete(PARSE_PROMPT, description)
        return VulnerableElements.of(
            (basename(f) for f in data.get("files") or ()),
            data.get("functions") or (),
            data.get("variables") or (),
        )

    def judge(self, request: OracleRequest) -> OracleResponse:
        content = json.dumps(
            {
                "cve_id": request.cve_id,
                "cve_description": request.cve_description,
                "commit_message": request.commit_message,
                "modified_code": request.modified_code,
            },
            sort_keys=True,
        )
        data = self._complete(JUDGE_PROMPT, content)
        return OracleResponse(bool(data.get("relevant")), str(data.get("rationale", "")))


@dataclass
class FallbackOracle(DescriptionOracle, RelevanceOracle):
    """主服务抛出 OracleUnavailable 时使用后备实现"""

    primary: Any
    fallback: RuleBasedOracle = field(default_factory=RuleBasedOracle)

    def parse(self, description: str) -> VulnerableElements:
        try:
            return self.primary.parse(description)
        except OracleUnavailable as e:
            logger.warning(f"描述解析服务不可用，使用规则解析: {e.message}")
            return self.fallback.parse(description)

    def judge(self, request: OracleRequest) -> OracleResponse:
        try:
            return self.primary.judge(request)
        except OracleUnavailable as e:
            logger.warning(f"相关性判定服务不可用，使用规则判定: {e.message}")
            return self.fallback.judge(request)


def create_oracle(oracle_config: Dict[str, Any], offline: bool = False, cache: Optional[ResponseCache] = None):
    """
    根据配置创建判定服务

    未配置 endpoint/model 时直接返回规则实现。
    """
    endpoint = oracle_config.get("endpoint")
    model = oracle_config.get("model")
    if not endpoint or not model:
        return RuleBasedOracle()
    primary = ChatCompletionOracle(
        endpoint,
        model,
        api_key=oracle_config.get("api_key"),
        timeout=float(oracle_config.get("timeout") or 60),
        cache=cache,
        offline=offline,
    )
    logger.info(f"使用外部判定服务: {endpoint} ({model})")
    return FallbackOracle(primary)
