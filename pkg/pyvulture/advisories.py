"""
pyvulture 漏洞公告获取模块

主要功能：
- 从 NVD 2.0 REST 接口按 keywordSearch 分页获取公告
- 从目录读取预先获取的公告 JSON（规范化格式、其列表，或原始 NVD 响应）
- 离线模式只使用录制的响应，从不访问网络

使用示例：
    >>> feed = fetch_advisories(AdvisorySource.directory("advisories/"))
    >>> feed = fetch_advisories(AdvisorySource.nvd("zlib"), network_config=config.get_network_config())
"""

import json
import re
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import requests

from .cache import ResponseCache
from .exceptions import DatabaseIOError, NetworkError, OfflineModeError, RateLimited
from .stability import RetryManager, network_retry_config

# 配置日志记录器
logger = logging.getLogger(__name__)

CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")
DEFAULT_NVD_ENDPOINT = "https://services.nvd.nist.gov/rest/json/cves/2.0"


@dataclass
class Advisory:
    """规范化的漏洞公告"""

    cve_id: str
    description: str = ""
    cpes: List[Any] = field(default_factory=list)  # CPE字符串或NVD cpeMatch字典
    references: List[str] = field(default_factory=list)
    fixed_version: Optional[str] = None
    published: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Advisory":
        cve_id = data.get("id") or data.get("cve_id")
        if not isinstance(cve_id, str) or not CVE_ID_RE.match(cve_id):
            raise ValueError(f"invalid CVE id: {cve_id!r}")
        return cls(
            cve_id=cve_id,
            description=str(data.get("description") or ""),
            cpes=list(data.get("cpes") or data.get("cpe") or []),
            references=[str(r) for r in data.get("references") or []],
            fixed_version=data.get("fixed_version"),
            published=data.get("published"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.cve_id,
            "description": self.description,
            "cpes": self.cpes,
            "references": self.references,
            "fixed_version": self.fixed_version,
            "published": self.published,
        }


@dataclass(frozen=True)
class AdvisorySource:
    """公告来源：nvd(keyword) 或 directory(path)"""

    kind: str
    value: str

    @classmethod
    def nvd(cls, keyword: str) -> "AdvisorySource":
        return cls("nvd", keyword)

    @classmethod
    def directory(cls, path: Union[str, Path]) -> "AdvisorySource":
        return cls("directory", str(path))


# ---------------------------------------------------------------- NVD 响应解析


def _walk_cpe_matches(nodes: Iterable[Dict[str, Any]]) -> Iterable[Dict[str, Any]]:
    for node in nodes or []:
        for match in node.get("cpeMatch") or []:
            if match.get("vulnerable", True):
                yield match
        yield from _walk_cpe_matches(node.get("children") or [])


def parse_nvd_response(payload: Dict[str, Any]) -> List[Advisory]:
    """
    解析 NVD 2.0 响应中的 vulnerabilities[].cve

    Returns:
        List[Advisory]: 公告列表，无效条目被跳过
    """
    advisories = []
    for item in payload.get("vulnerabilities") or []:
        cve = item.get("cve") or {}
        cve_id = cve.get("id")
        if not isinstance(cve_id, str) or not CVE_ID_RE.match(cve_id):
            logger.warning(f"跳过无效的NVD条目: {cve_id!r}")
            continue
        descriptions = cve.get("descriptions") or []
        description = next((d.get("value", "") for d in descriptions if d.get("lang") == "en"), "")
        if not description and descriptions:
            description = descriptions[0].get("value", "")
        cpes = []
        for configuration in cve.get("configurations") or []:
            cpes.extend(_walk_cpe_matches(configuration.get("nodes") or []))
        references = [r["url"] for r in cve.get("references") or [] if r.get("url")]
        advisories.append(Advisory(cve_id, description, cpes, references, published=cve.get("published")))
    return advisories


# ---------------------------------------------------------------- NVD 客户端


class NvdClient:
    """
    NVD REST 客户端

    403/429 视为限流，其余失败视为网络错误，两者都按指数退避重试（默认1秒起，每次×2，最多5次）。
    """

    def __init__(
        self,
        endpoint: str = DEFAULT_NVD_ENDPOINT,
        results_per_page: int = 2000,
        timeout: float = 30.0,
        retry: Optional[RetryManager] = None,
        cache: Optional[ResponseCache] = None,
        offline: bool = False,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.results_per_page = results_per_page
        self.timeout = timeout
        self.retry = retry or RetryManager(network_retry_config())
        self.cache = cache or ResponseCache()
        self.offline = offline
        self._session = session or requests.Session()

    @classmethod
    def from_config(cls, network_config: Dict[str, Any], offline: bool = False, **kwargs) -> "NvdClient":
        retry = RetryManager(
            network_retry_config(
                max_attempts=int(network_config.get("max_attempts", 5)),
                base_delay=float(network_config.get("base_delay", 1.0)),
                backoff_factor=float(network_config.get("backoff_factor", 2.0)),
            )
        )
        cache = ResponseCache(network_config.get("recordings"), network_config.get("record_mode") or "off")
        return cls(
            endpoint=network_config.get("nvd_endpoint") or DEFAULT_NVD_ENDPOINT,
            results_per_page=int(network_config.get("results_per_page", 2000)),
            timeout=float(network_config.get("timeout", 30)),
            retry=retry,
            cache=cache,
            offline=offline,
            **kwargs,
        )

    def _request(self, params: Dict[str, Any]) -> Dict[str, Any]:
        try:
            response = self._session.get(self.endpoint, params=params, timeout=self.timeout)
        except requests.RequestException as e:
            raise NetworkError(f"NVD request failed: {e}", url=self.endpoint) from e
        if response.status_code in (403, 429):
            raise RateLimited(f"NVD rate limit (HTTP {response.status_code})", url=self.endpoint, status=response.status_code)
        if response.status_code >= 400:
            raise NetworkError(f"NVD returned HTTP {response.status_code}", url=self.endpoint)
        try:
            return response.json()
        except ValueError as e:
            raise NetworkError(f"NVD returned invalid JSON: {e}", url=self.endpoint) from e

    def get_page(self, params: Dict[str, Any]) -> Dict[str, Any]:
        """获取一页结果，优先使用录制的响应"""
        key = ResponseCache.request_key("GET", self.endpoint, params)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        if self.offline or self.cache.replaying:
            raise OfflineModeError(f"No recorded NVD response for {params}", url=self.endpoint)
        payload = self.retry.execute(self._request, params)
        self.cache.set(key, payload, request={"method": "GET", "url": self.endpoint, "params": params})
        return payload

    def search(self, keyword: str) -> List[Advisory]:
        """按关键词分页获取全部公告"""
        advisories: List[Advisory] = []
        start = 0
        while True:
            params = {"keywordSearch": keyword, "resultsPerPage": self.results_per_page, "startIndex": start}
            page = self.get_page(params)
            batch = page.get("vulnerabilities") or []
            advisories.extend(parse_nvd_response(page))
            total = int(page.get("totalResults", len(batch)))
            start += len(batch)
            logger.debug(f"NVD {keyword}: {start}/{total}")
            if not batch or start >= total:
                break
        stats = self.retry.get_stats().get("_request", {})
        logger.info(f"NVD关键词 {keyword!r} 返回 {len(advisories)} 条公告（请求重试 {stats.get('retries', 0)} 次）")
        return advisories


# ---------------------------------------------------------------- 目录读取


def _advisories_from_json(data: Any) -> List[Advisory]:
    if isinstance(data, dict) and "vulnerabilities" in data:
        return parse_nvd_response(data)
    if isinstance(data, dict):
        return [Advisory.from_dict(data)]
    if isinstance(data, list):
        return [Advisory.from_dict(item) for item in data]
    raise ValueError(f"unsupported advisory document: {type(data).__name__}")


def read_advisory_directory(path: Union[str, Path]) -> List[Advisory]:
    """
    读取目录中的 *.json 公告文件

    格式错误的文件记录警告后跳过。

    Raises:
        DatabaseIOError: 目录不存在
    """
    directory = Path(path)
    if not directory.is_dir():
        raise DatabaseIOError(f"Advisory directory not found: {directory}", path=str(directory))
    advisories: List[Advisory] = []
    for file_path in sorted(directory.glob("*.json")):
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                advisories.extend(_advisories_from_json(json.load(f)))
        except (OSError, ValueError, KeyError, TypeError, AttributeError) as e:
            logger.warning(f"跳过格式错误的公告文件 {file_path.name}: {e}")
    return advisories


def fetch_advisories(
    source: AdvisorySource,
    network_config: Optional[Dict[str, Any]] = None,
    offline: bool = False,
    client: Optional[NvdClient] = None,
) -> List[Advisory]:
    """
    获取公告并按CVE编号去重排序

    Args:
        source: 公告来源
        network_config: 网络配置（NVD模式使用）
        offline: 离线模式，NVD模式下只读取录制的响应
        client: 预先构造的NVD客户端

    Raises:
        NetworkError: 重试耗尽
        RateLimited: 重试耗尽时仍被限流
        OfflineModeError: 离线模式下没有录制的响应
    """
    if source.kind == "directory":
        advisories = read_advisory_directory(source.value)
    elif source.kind == "nvd":
        nvd = client or NvdClient.from_config(network_config or {}, offline=offline)
        advisories = nvd.search(source.value)
    else:
        raise ValueError(f"Unknown advisory source: {source.kind}")

    unique: Dict[str, Advisory] = {}
    for advisory in advisories:
        unique.setdefault(advisory.cve_id, advisory)
    return [unique[k] for k in sorted(unique)]
