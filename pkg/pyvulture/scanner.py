"""
pyvulture 流水线模块

把各个模块组合为三个阶段：

- build_component_db: 筛选TPL、为每个版本生成函数指纹、冗余消除并写入组件段
- map_patches: 匹配公告、映射补丁提交并写入漏洞段
- scan_target: 识别目标中的TPL复用，并对每个 (复用, CVE) 组合做1-day漏洞检测

每个阶段都用 ParallelExecutor 并发执行，结果顺序与工作者数量无关。

使用示例：
    >>> specs = load_repo_list("repos.json")
    >>> result = build_component_db(specs, config)
    >>> print(result.summary_line())
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .advisories import AdvisorySource, fetch_advisories
from .cache import ResponseCache
from .component import (
    ComponentSegment,
    TplVersionRecord,
    build_segment,
    build_version_records,
    eliminate_redundancy,
    persist_segment,
    select_tpls,
)
from .config import Config
from .detect import VulnFinding, VulnReport, analyze_reuse, generate_report
from .exceptions import DatabaseIOError, DiffFailed, RepoUnavailable, handle_exception
from .oracle import create_oracle
from .parallel import ParallelExecutor
from .performance import performance_context
from .repo import open_repo
from .reuse import ReuseReport, detect_candidates, fingerprint_target, resolve_reuses
from .versions import sort_versions
from .vulndb import CveRecord, MappingTrace, PatchMapper, match_cves_to_tpl, persist_vulnerability_segment

# 配置日志记录器
logger = logging.getLogger(__name__)

COMPONENT_FILE = "component.jsonl"
VULNERABILITY_FILE = "vulnerability.jsonl"


@dataclass(frozen=True)
class RepoSpec:
    """仓库列表中的一项"""

    name: str
    location: str
    mode: str = "subprocess"
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[Path] = None) -> "RepoSpec":
        location = str(data["location"])
        # 相对路径相对于列表文件所在目录
        if base_dir is not None and "://" not in location and not location.startswith("git@"):
            candidate = Path(location)
            if not candidate.is_absolute():
                location = str(base_dir / candidate)
        name = data.get("name") or Path(location).stem
        metadata = dict(data.get("metadata") or {})
        metadata.setdefault("name", name)
        return cls(name=name, location=location, mode=data.get("mode", "subprocess"), metadata=metadata)


def load_repo_list(path: Union[str, Path]) -> List[RepoSpec]:
    """
    读取仓库列表（JSON数组，元素为 {name, location, mode, metadata}）

    Raises:
        DatabaseIOError: 文件不可读或格式错误
    """
    list_path = Path(path)
    try:
        with open(list_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise DatabaseIOError(f"Failed to read repo list: {e}", path=str(list_path)) from e
    if not isinstance(data, list):
        raise DatabaseIOError("Repo list must be a JSON array", path=str(list_path))
    try:
        specs = [RepoSpec.from_dict(item, list_path.parent) for item in data]
    except (KeyError, TypeError, AttributeError) as e:
        raise DatabaseIOError(f"Malformed repo list entry: {e}", path=str(list_path)) from e
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise DatabaseIOError("Repo names must be unique", path=str(list_path))
    return specs


def read_keyword_file(path: Union[str, Path]) -> List[str]:
    """每行一个关键词，# 开头的行为注释"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise DatabaseIOError(f"Failed to read keyword file: {e}", path=str(path)) from e
    return [line.strip() for line in lines if line.strip() and not line.strip().startswith("#")]


def _executor(config: Config, executor_type: Optional[str] = None) -> ParallelExecutor:
    return ParallelExecutor(config.jobs, executor_type or config.get("concurrent.executor_type", "thread"))


# ---------------------------------------------------------------- 组件段


@dataclass
class BuildResult:
    """组件段构建结果"""

    segment: ComponentSegment
    path: Path
    selected: List[str] = field(default_factory=list)

    def summary_line(self) -> str:
        s = self.segment.summary()
        return f"{s['tpls']} tpls, {s['versions']} versions, {s['fingerprints']} fingerprints, {s['eliminated']} eliminated"


def _build_records(spec: RepoSpec) -> Tuple[str, List[TplVersionRecord]]:
    with open_repo(spec.location, spec.mode) as repo:
        return spec.name, build_version_records(repo, spec.name)


@handle_exception
def build_component_db(
    specs: Sequence[RepoSpec],
    config: Config,
    platform_keywords: Optional[Sequence[str]] = None,
    exclusion_keywords: Optional[Sequence[str]] = None,
    executor: Optional[ParallelExecutor] = None,
) -> BuildResult:
    """
    构建并写入组件段

    只有带元数据（title/tags/description）的仓库参与关键词筛选，未提供元数据的仓库视为
    已由调用者选定。

    Raises:
        RepoUnavailable: 仓库无法打开
        DatabaseIOError: 写入失败
    """
    platform = list(platform_keywords if platform_keywords is not None else config.get("selection.platform_keywords", []))
    exclusion = list(exclusion_keywords if exclusion_keywords is not None else config.get("selection.exclusion_keywords", []))

    described = [s for s in specs if any(s.metadata.get(k) for k in ("title", "tags", "description"))]
    chosen = set(select_tpls([s.metadata for s in described], platform, exclusion, config.min_stars))
    selected = [s for s in specs if s.name in chosen or s not in described]
    logger.info(f"入选TPL: {len(selected)}/{len(specs)}")

    pool = executor or _executor(config)
    try:
        with performance_context("build_version_records"):
            built = pool.map(_build_records, selected)
        with performance_context("eliminate_redundancy"):
            segment = eliminate_redundancy(build_segment(dict(built)))
    finally:
        if executor is None:
            pool.shutdown()

    path = Path(config.db_path) / COMPONENT_FILE
    persist_segment(segment, path)
    return BuildResult(segment=segment, path=path, selected=[s.name for s in selected])


# ---------------------------------------------------------------- 漏洞段


@dataclass
class MappingResult:
    """补丁映射结果"""

    records: List[CveRecord]
    traces: List[MappingTrace]
    path: Path

    @property
    def mapped(self) -> int:
        return sum(1 for r in self.records if r.is_mapped)

    def summary_line(self) -> str:
        return f"{len(self.records)} cves, {self.mapped} mapped, {len(self.records) - self.mapped} unmapped"


def _unavailable(records: List[CveRecord]) -> List[Tuple[CveRecord, MappingTrace]]:
    results = []
    for record in records:
        record.mapping_reason = "repo-unavailable"
        results.append((record, MappingTrace(record.cve_id, record.tpl_name, reason="repo-unavailable")))
    return results


def _map_tpl(job: Tuple[RepoSpec, List[CveRecord], PatchMapper]) -> List[Tuple[CveRecord, MappingTrace]]:
    spec, records, mapper = job
    try:
        repo = open_repo(spec.location, spec.mode)
    except RepoUnavailable:
        return _unavailable(records)
    with repo:
        try:
            tags = repo.list_tags()
        except (RepoUnavailable, DiffFailed) as e:
            logger.warning(f"{spec.name}: 无法读取标签: {e.message}")
            return _unavailable(records)
        return [(record, mapper.map_cve(record, repo, tags)) for record in records]


@handle_exception
def map_patches(
    specs: Sequence[RepoSpec],
    segment: ComponentSegment,
    config: Config,
    advisories_dir: Optional[Union[str, Path]] = None,
    oracle=None,
    executor: Optional[ParallelExecutor] = None,
) -> MappingResult:
    """
    为组件段中的每个TPL匹配公告并映射补丁提交

    Args:
        specs: 仓库列表，只处理组件段中出现的TPL
        segment: 组件段
        config: 配置
        advisories_dir: 公告目录；为None时按TPL名查询NVD
        oracle: 判定服务，默认按配置创建
        executor: 执行器；判定服务持有网络会话，因此默认使用线程模式

    Raises:
        NetworkError / RateLimited / OfflineModeError: 获取公告失败
        DatabaseIOError: 写入失败
    """
    recordings = config.get("network.recordings")
    cache = ResponseCache(recordings, "replay" if config.offline else config.get("network.record_mode", "off")) if recordings else None
    if oracle is None:
        oracle = create_oracle(config.get_oracle_config(), offline=config.offline, cache=cache)
    mapper = PatchMapper(k=config.k, description_oracle=oracle, relevance_oracle=oracle)

    shared_feed = None
    if advisories_dir is not None:
        shared_feed = fetch_advisories(AdvisorySource.directory(advisories_dir))

    jobs = []
    for spec in sorted((s for s in specs if s.name in segment.tpls), key=lambda s: s.name):
        versions = sort_versions(r.version_tag for r in segment.tpls[spec.name])
        if shared_feed is not None:
            feed = shared_feed
        else:
            feed = fetch_advisories(AdvisorySource.nvd(spec.name), config.get_network_config(), offline=config.offline)
        records = match_cves_to_tpl(feed, spec.name, versions)
        if records:
            jobs.append((spec, records, mapper))

    pool = executor or _executor(config, "thread")
    try:
        with performance_context("map_patches"):
            results = [pair for chunk in pool.map(_map_tpl, jobs) for pair in chunk]
    finally:
        if executor is None:
            pool.shutdown()

    records = [record for record, _ in results]
    traces = [trace for _, trace in results]
    path = Path(config.db_path) / VULNERABILITY_FILE
    persist_vulnerability_segment(records, path)
    return MappingResult(records=records, traces=traces, path=path)


# ---------------------------------------------------------------- 扫描


@dataclass
class ScanResult:
    """扫描结果：复用报告与漏洞报告"""

    reuse_report: ReuseReport
    vuln_report: VulnReport

    def to_dict(self) -> Dict[str, Any]:
        return {"reuse": self.reuse_report.to_dict(), "vulnerabilities": self.vuln_report.to_dict()}

    def render_table(self) -> str:
        return self.reuse_report.render_table() + "\n\n" + self.vuln_report.render_table()


def _analyze(job) -> List[VulnFinding]:
    target, reuse, cve, th_hash = job
    return analyze_reuse(target, reuse, cve, th_hash)


@handle_exception
def scan_target(
    target_dir: Union[str, Path],
    segment: ComponentSegment,
    vuln_records: Sequence[CveRecord],
    config: Config,
    executor: Optional[ParallelExecutor] = None,
) -> ScanResult:
    """
    扫描目标源码树

    Raises:
        DatabaseIOError: 目标目录不存在
    """
    root = Path(target_dir)
    if not root.is_dir():
        raise DatabaseIOError(f"Target is not a readable directory: {root}", path=str(root))

    pool = executor or _executor(config)
    try:
        with performance_context("fingerprint_target"):
            target = fingerprint_target(root)
        with performance_context("detect_reuse"):
            candidates = detect_candidates(target.functions, segment, config.th_hash, config.th_sim, config.seed, pool)
            reuse_report = resolve_reuses(candidates, target.target_id)

        jobs = []
        for reuse in reuse_report.confirmed:
            for cve in sorted((r for r in vuln_records if r.tpl_name == reuse.tpl_name and r.is_mapped), key=lambda r: r.cve_id):
                jobs.append((target, reuse, cve, config.th_hash))
        with performance_context("detect_vulnerabilities"):
            findings = [f for chunk in pool.map(_analyze, jobs) for f in chunk]
    finally:
        if executor is None:
            pool.shutdown()

    vuln_report = generate_report(findings, vuln_records, target.target_id)
    logger.info(f"{target.target_id}: {len(reuse_report.confirmed)} 个复用，{len(vuln_report.vulnerable)} 个漏洞")
    return ScanResult(reuse_report=reuse_report, vuln_report=vuln_report)
