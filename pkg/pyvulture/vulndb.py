"""
pyvulture 漏洞段模块

把漏洞公告与TPL版本关联，并通过四步多切片搜索把每个CVE映射到补丁提交：

1. 描述解析：从漏洞描述中提取漏洞元素（文件、函数、变量）
2. 按日期切片：取最后一个漏洞版本与第一个修复版本之间的提交，按 k 个一组切片，
   只保留首尾累计差异触及漏洞元素的切片
3. 候选提交：在候选切片中逐个提交计算差异
4. 相关性确认：由判定服务确认提交与CVE相关

主要类：
- CpeConstraint: CPE版本约束（枚举或区间）
- CveRecord: 漏洞记录
- CommitSlice: 提交切片
- PatchMapper: 组合四个步骤并记录每一步的追踪信息

使用示例：
    >>> records = match_cves_to_tpl(advisories, "wireshark", [t for t, _ in repo.list_tags()])
    >>> trace = PatchMapper(k=20).map_cve(records[0], repo)
    >>> print(trace.render())
"""

import json
import math
import re
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .advisories import CVE_ID_RE, Advisory
from .component import SCHEMA_VERSION, dumps_line, read_segment_lines
from .exceptions import (
    DatabaseIOError,
    DiffFailed,
    EmptyRange,
    NoElements,
    OracleUnavailable,
    RepoUnavailable,
    UnparseableCpe,
)
from .oracle import OracleRequest, RuleBasedOracle, VulnerableElements
from .repo import CommitInfo, GitRepoHandle, parse_unified_diff
from .snippets import extract_snippets
from .utils import basename, ensure_directory, format_timestamp, is_source_file
from .versions import compare_versions, sort_versions

# 配置日志记录器
logger = logging.getLogger(__name__)

SEGMENT_NAME = "vulnerability"
DEFAULT_SLICE_SIZE = 20
# 交给判定服务的差异文本上限（字符）
MAX_MODIFIED_CODE = 16000

_IDENTIFIER_RE = re.compile(r"[A-Za-z_]\w*")
_WILDCARDS = ("*", "-", "")


# ---------------------------------------------------------------- CPE 约束


@dataclass(frozen=True)
class CpeConstraint:
    """
    CPE 版本约束

    enumeration 非空时为枚举形式，否则为区间 [start, end]，两端可选且各自带包含标志。
    """

    product: str
    enumeration: Tuple[str, ...] = ()
    start: Optional[str] = None
    start_inclusive: bool = True
    end: Optional[str] = None
    end_inclusive: bool = True

    def __post_init__(self):
        if self.start is not None and self.end is not None and compare_versions(self.start, self.end) > 0:
            raise ValueError(f"interval start {self.start} is after end {self.end}")

    @property
    def is_interval(self) -> bool:
        return not self.enumeration

    def matches(self, version: str) -> bool:
        """判断版本是否落在约束内"""
        if self.enumeration:
            return any(compare_versions(version, v) == 0 for v in self.enumeration)
        if self.start is not None:
            c = compare_versions(version, self.start)
            if c < 0 or (c == 0 and not self.start_inclusive):
                return False
        if self.end is not None:
            c = compare_versions(version, self.end)
            if c > 0 or (c == 0 and not self.end_inclusive):
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        if self.enumeration:
            return {"product": self.product, "versions": list(self.enumeration)}
        return {
            "product": self.product,
            "start": self.start,
            "start_inclusive": self.start_inclusive,
            "end": self.end,
            "end_inclusive": self.end_inclusive,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CpeConstraint":
        if data.get("versions"):
            return cls(data["product"], tuple(data["versions"]))
        return cls(
            data["product"],
            start=data.get("start"),
            start_inclusive=data.get("start_inclusive", True),
            end=data.get("end"),
            end_inclusive=data.get("end_inclusive", True),
        )


def _split_cpe(cpe: str) -> List[str]:
    # 反斜杠转义的冒号不作为分隔符
    return [p.replace("\\:", ":") for p in re.split(r"(?<!\\):", cpe)]


def _product_and_version(cpe: str) -> Tuple[str, str]:
    parts = _split_cpe(cpe.strip())
    if cpe.startswith("cpe:2.3:") and len(parts) >= 6:
        return parts[4], parts[5]
    if cpe.startswith("cpe:/") and len(parts) >= 4:
        return parts[3], parts[4] if len(parts) > 4 else ""
    raise ValueError(f"not a CPE string: {cpe!r}")


def parse_cpe(cve_id: str, raw: Any) -> CpeConstraint:
    """
    解析一条CPE

    接受 CPE 2.3 字符串、CPE 2.2 URI、NVD cpeMatch 字典（criteria 与 versionStart/End 键）
    以及 {"product", "versions"} 形式的规范化字典。

    Raises:
        UnparseableCpe: 无法解析
    """
    try:
        if isinstance(raw, str):
            product, version = _product_and_version(raw)
            if version in _WILDCARDS:
                return CpeConstraint(product)
            return CpeConstraint(product, (version,))
        if isinstance(raw, dict):
            if "criteria" in raw or "cpe23Uri" in raw:
                product, version = _product_and_version(raw.get("criteria") or raw["cpe23Uri"])
            elif "product" in raw:
                product, version = raw["product"], raw.get("version") or "*"
                if raw.get("versions"):
                    return CpeConstraint(product, tuple(str(v) for v in raw["versions"]))
            else:
                raise ValueError("missing criteria")
            start_inc, start_exc = raw.get("versionStartIncluding"), raw.get("versionStartExcluding")
            end_inc, end_exc = raw.get("versionEndIncluding"), raw.get("versionEndExcluding")
            if version not in _WILDCARDS and not any((start_inc, start_exc, end_inc, end_exc)):
                return CpeConstraint(product, (version,))
            return CpeConstraint(
                product,
                start=start_inc or start_exc,
                start_inclusive=start_exc is None,
                end=end_inc or end_exc,
                end_inclusive=end_exc is None,
            )
        raise ValueError(f"unsupported CPE value of type {type(raw).__name__}")
    except (ValueError, KeyError, TypeError, AttributeError, IndexError) as e:
        raise UnparseableCpe(cve_id, raw, details={"reason": str(e)}) from e


# ---------------------------------------------------------------- 漏洞记录


@dataclass
class CveRecord:
    """漏洞记录，patch_commit 为 None 当且仅当映射没有找到补丁（mapping_reason 说明原因）"""

    cve_id: str
    description: str = ""
    tpl_name: str = ""
    cpes: List[CpeConstraint] = field(default_factory=list)
    vulnerable_elements: VulnerableElements = field(default_factory=VulnerableElements)
    vulnerable_versions: List[str] = field(default_factory=list)
    fixed_version: Optional[str] = None
    references: List[str] = field(default_factory=list)
    patch_commit: Optional[str] = None
    patch_url: Optional[str] = None
    mapping_reason: str = "unmapped"
    patch_code: Dict[str, Dict[str, str]] = field(default_factory=lambda: {"vulnerable": {}, "patched": {}})

    def __post_init__(self):
        if not CVE_ID_RE.match(self.cve_id):
            raise ValueError(f"invalid CVE id: {self.cve_id!r}")

    @property
    def is_mapped(self) -> bool:
        return self.patch_commit is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cve_id": self.cve_id,
            "tpl": self.tpl_name,
            "description": self.description,
            "cpes": [c.to_dict() for c in self.cpes],
            "vulnerable_elements": self.vulnerable_elements.to_dict(),
            "vulnerable_versions": list(self.vulnerable_versions),
            "fixed_version": self.fixed_version,
            "references": list(self.references),
            "patch_commit": self.patch_commit,
            "patch_url": self.patch_url,
            "mapping_reason": self.mapping_reason,
            "patch_code": self.patch_code,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CveRecord":
        return cls(
            cve_id=data["cve_id"],
            description=data.get("description", ""),
            tpl_name=data.get("tpl", ""),
            cpes=[CpeConstraint.from_dict(c) for c in data.get("cpes") or []],
            vulnerable_elements=VulnerableElements.from_dict(data.get("vulnerable_elements") or {}),
            vulnerable_versions=list(data.get("vulnerable_versions") or []),
            fixed_version=data.get("fixed_version"),
            references=list(data.get("references") or []),
            patch_commit=data.get("patch_commit"),
            patch_url=data.get("patch_url"),
            mapping_reason=data.get("mapping_reason", "unmapped"),
            patch_code=data.get("patch_code") or {"vulnerable": {}, "patched": {}},
        )


def _mentions(advisory: Advisory, name: str) -> bool:
    if name in advisory.description.lower():
        return True
    for raw in advisory.cpes:
        text = raw if isinstance(raw, str) else json.dumps(raw, sort_keys=True)
        if name in text.lower():
            return True
    return False


def match_cves_to_tpl(advisories: Iterable[Advisory], tpl_name: str, versions: Sequence[str]) -> List[CveRecord]:
    """
    CPE 引导的公告匹配

    保留描述或CPE中包含TPL名的公告；TPL名是CPE产品名子串的约束才参与版本解析。
    无法解析的CPE记录警告，公告保留但该约束为空。

    Args:
        advisories: 公告列表
        tpl_name: TPL名
        versions: 按版本顺序升序排列的版本标签

    Returns:
        List[CveRecord]: 按CVE编号排序的记录
    """
    name = tpl_name.lower()
    records = []
    for advisory in advisories:
        if not _mentions(advisory, name):
            continue
        constraints = []
        for raw in advisory.cpes:
            try:
                constraint = parse_cpe(advisory.cve_id, raw)
            except UnparseableCpe:
                continue
            if name in constraint.product.lower():
                constraints.append(constraint)
        vulnerable = [v for v in versions if any(c.matches(v) for c in constraints)]
        records.append(
            CveRecord(
                cve_id=advisory.cve_id,
                description=advisory.description,
                tpl_name=tpl_name,
                cpes=constraints,
                vulnerable_versions=vulnerable,
                fixed_version=advisory.fixed_version,
                references=list(advisory.references),
            )
        )
        logger.debug(f"{advisory.cve_id} -> {tpl_name}: {len(vulnerable)} 个漏洞版本")
    return sorted(records, key=lambda r: r.cve_id)


# ---------------------------------------------------------------- 四步映射


def parse_vulnerable_elements(description: str, oracle=None) -> VulnerableElements:
    """解析漏洞元素；判定服务不可用时使用规则解析"""
    fallback = RuleBasedOracle()
    if oracle is None:
        return fallback.parse(description)
    try:
        return oracle.parse(description)
    except OracleUnavailable as e:
        logger.warning(f"描述解析服务不可用，使用规则解析: {e.message}")
        return fallback.parse(description)


@dataclass(frozen=True)
class CommitSlice:
    """提交切片，index 从 1 开始"""

    index: int
    commits: Tuple[CommitInfo, ...]

    @property
    def size(self) -> int:
        return len(self.commits)

    @property
    def first(self) -> CommitInfo:
        return self.commits[0]

    @property
    def last(self) -> CommitInfo:
        return self.commits[-1]


def slice_commits(commits_in_range: Sequence[CommitInfo], k: int = DEFAULT_SLICE_SIZE) -> List[CommitSlice]:
    """
    按 k 个一组平均切片

    Returns:
        List[CommitSlice]: ceil(n/k) 个切片，除最后一个外都恰好有 k 个提交

    Raises:
        EmptyRange: 没有提交
    """
    if k < 1:
        raise ValueError(f"slice size must be positive, got {k}")
    n = len(commits_in_range)
    if n == 0:
        raise EmptyRange()
    return [CommitSlice(i + 1, tuple(commits_in_range[i * k : (i + 1) * k])) for i in range(math.ceil(n / k))]


def diff_touches(diff_text: str, elements: VulnerableElements) -> bool:
    """
    判断差异是否触及漏洞元素

    修改的文件名属于漏洞文件，或者 @@ 行上下文与变更行中解析出的标识符等于漏洞函数或变量。
    """
    identifiers = elements.identifiers
    for hunk in parse_unified_diff(diff_text):
        if elements.files and basename(hunk.path) in elements.files:
            return True
        if identifiers:
            for text in [hunk.section] + hunk.changed:
                if identifiers.intersection(_IDENTIFIER_RE.findall(text)):
                    return True
    return False


def filter_candidate_slices(slices: Sequence[CommitSlice], vulnerable_elements: VulnerableElements, repo: GitRepoHandle) -> List[CommitSlice]:
    """
    保留累计差异（第一个提交的父提交到最后一个提交）触及漏洞元素的切片

    差异计算失败的切片保守地保留。
    """
    if vulnerable_elements.is_empty():
        return []
    kept = []
    for s in slices:
        try:
            text = repo.diff(repo.parent(s.first.hash), s.last.hash)
        except DiffFailed:
            logger.warning(f"切片 #{s.index} 差异计算失败，保留")
            kept.append(s)
            continue
        if diff_touches(text, vulnerable_elements):
            kept.append(s)
    return kept


def select_candidate_commits(commit_slice: CommitSlice, vulnerable_elements: VulnerableElements, repo: GitRepoHandle) -> List[str]:
    """在切片内逐个提交计算差异，返回触及漏洞元素的提交"""
    if vulnerable_elements.is_empty():
        return []
    candidates = []
    for commit in commit_slice.commits:
        try:
            text = repo.diff_of(commit.hash)
        except DiffFailed:
            logger.warning(f"提交 {commit.hash[:12]} 差异计算失败，保留为候选")
            candidates.append(commit.hash)
            continue
        if diff_touches(text, vulnerable_elements):
            candidates.append(commit.hash)
    return candidates


def _commit_order(repo: Optional[GitRepoHandle]):
    """按 (提交时间, 哈希) 排序的键；拿不到时间的提交排在最后"""
    times: Dict[str, datetime] = {}
    if repo is not None:
        try:
            times = {c.hash: c.timestamp for c in repo.all_commits()}
        except DiffFailed as e:
            logger.warning(f"无法读取提交时间，按哈希排序: {e.message}")
    return lambda commit: (commit not in times, times.get(commit), commit)


def confirm_patch_commit(cve: CveRecord, candidates: Sequence[str], oracle=None, repo: Optional[GitRepoHandle] = None) -> Optional[str]:
    """
    逐个询问判定服务候选提交是否与CVE相关

    多个提交被确认时按 (提交时间, 哈希) 返回最早的一个并记录歧义。

    Returns:
        确认的提交哈希，没有确认时返回None
    """
    fallback = RuleBasedOracle()
    confirmed = []
    for commit in candidates:
        message = repo.commit_message(commit) if repo else ""
        modified = ""
        if repo is not None:
            try:
                modified = repo.diff_of(commit)[:MAX_MODIFIED_CODE]
            except DiffFailed:
                modified = ""
        request = OracleRequest(
            cve_description=cve.description,
            commit_message=message,
            modified_code=modified,
            cve_id=cve.cve_id,
            functions=cve.vulnerable_elements.functions,
        )
        try:
            response = (oracle or fallback).judge(request)
        except OracleUnavailable as e:
            logger.warning(f"相关性判定服务不可用，使用规则判定: {e.message}")
            response = fallback.judge(request)
        logger.debug(f"{cve.cve_id} {commit[:12]}: relevant={response.relevant} ({response.rationale})")
        if response.relevant:
            confirmed.append(commit)

    if not confirmed:
        return None
    if len(confirmed) > 1:
        confirmed.sort(key=_commit_order(repo))
        logger.warning(f"{cve.cve_id}: {len(confirmed)} 个提交均被确认，取最早的 {confirmed[0][:12]}")
    return confirmed[0]


def extract_patch_code(repo: GitRepoHandle, commit: str) -> Dict[str, Dict[str, str]]:
    """
    收集补丁提交修改的代码项

    对每个被修改的C/C++文件，把差异行映射到前后两侧的函数与全局声明，按文件拼接这些项
    修改前（vulnerable）与修改后（patched）的源码。
    """
    parent = repo.parent(commit)
    code: Dict[str, Dict[str, str]] = {"vulnerable": {}, "patched": {}}
    hunks_by_path: Dict[str, list] = {}
    for hunk in parse_unified_diff(repo.diff(parent, commit)):
        if is_source_file(hunk.path):
            hunks_by_path.setdefault(hunk.path, []).append(hunk)

    for path in sorted(hunks_by_path):
        deleted_lines: Set[int] = set()
        added_lines: Set[int] = set()
        for hunk in hunks_by_path[path]:
            deleted, added = hunk.changed_line_numbers()
            deleted_lines.update(deleted)
            added_lines.update(added)
        before_text = repo.file_at(parent, path) if parent else None
        after_text = repo.file_at(commit, path)
        before = extract_snippets(before_text, path) if before_text else []
        after = extract_snippets(after_text, path) if after_text else []

        touched = {
            (s.kind, s.name)
            for s in before
            if any(s.contains_line(n) for n in deleted_lines)
        }
        touched.update(
            (s.kind, s.name) for s in after if any(s.contains_line(n) for n in added_lines)
        )
        vulnerable = [s.body for s in before if (s.kind, s.name) in touched]
        patched = [s.body for s in after if (s.kind, s.name) in touched]
        if vulnerable:
            code["vulnerable"][path] = "\n".join(vulnerable) + "\n"
        if patched:
            code["patched"][path] = "\n".join(patched) + "\n"
    return code


@dataclass
class MappingTrace:
    """单个CVE的映射追踪信息"""

    cve_id: str
    tpl_name: str = ""
    window: Tuple[Optional[str], Optional[str]] = (None, None)
    tags: Tuple[Optional[str], Optional[str]] = (None, None)
    commits: int = 0
    slices: int = 0
    last_slice_size: int = 0
    candidate_slices: List[int] = field(default_factory=list)
    candidate_commits: List[str] = field(default_factory=list)
    confirmed: Optional[str] = None
    reason: str = ""
    diffs_computed: int = 0

    def render(self) -> str:
        lines = [f"{self.cve_id} ({self.tpl_name})"]
        if self.window[1]:
            lines.append(f"  window: {self.window[0] or '-'} .. {self.window[1]} ({self.tags[0]} -> {self.tags[1]})")
        lines.append(f"  {self.commits} commits")
        lines.append(f"  {self.slices} slices (last {self.last_slice_size})")
        indexes = ", ".join(f"#{i}" for i in self.candidate_slices)
        lines.append(f"  {len(self.candidate_slices)} candidate slice(s)" + (f": {indexes}" if indexes else ""))
        lines.append(f"  {len(self.candidate_commits)} candidate commit(s)")
        lines.append(f"  patch commit: {self.confirmed}" if self.confirmed else f"  reason: {self.reason}")
        return "\n".join(lines)


class _CountingRepo:
    """统计差异计算次数的仓库包装"""

    def __init__(self, repo: GitRepoHandle):
        self._repo = repo
        self.diffs = 0

    def diff(self, a, b):
        self.diffs += 1
        return self._repo.diff(a, b)

    def diff_of(self, commit):
        self.diffs += 1
        return self._repo.diff_of(commit)

    def __getattr__(self, name):
        return getattr(self._repo, name)


class PatchMapper:
    """
    补丁提交映射器

    Args:
        k: 切片大小
        description_oracle: 描述解析服务，默认规则实现
        relevance_oracle: 相关性判定服务，默认规则实现
    """

    def __init__(self, k: int = DEFAULT_SLICE_SIZE, description_oracle=None, relevance_oracle=None):
        if k < 1:
            raise ValueError(f"slice size must be positive, got {k}")
        self.k = k
        self.description_oracle = description_oracle
        self.relevance_oracle = relevance_oracle

    def search_window(
        self, record: CveRecord, tags: Sequence[Tuple[str, datetime]]
    ) -> Optional[Tuple[Tuple[str, datetime], Tuple[str, datetime]]]:
        """
        返回 (最后一个漏洞版本, 第一个修复版本)

        修复版本默认取版本顺序中紧随最后一个漏洞版本的标签，公告指明修复版本时以公告为准。
        """
        times = dict(tags)
        ordered = sort_versions(times)
        vulnerable = [t for t in ordered if t in set(record.vulnerable_versions)]
        if not vulnerable:
            return None
        last_vulnerable = vulnerable[-1]
        fixed = None
        if record.fixed_version:
            fixed = next((t for t in ordered if compare_versions(t, record.fixed_version) == 0), None)
        if fixed is None:
            position = ordered.index(last_vulnerable)
            fixed = ordered[position + 1] if position + 1 < len(ordered) else None
        if fixed is None:
            return None
        return (last_vulnerable, times[last_vulnerable]), (fixed, times[fixed])

    def map_cve(self, record: CveRecord, repo: GitRepoHandle, tags: Optional[Sequence[Tuple[str, datetime]]] = None) -> MappingTrace:
        """
        映射一个CVE，结果写回 record 并返回追踪信息

        没有漏洞元素时在计算任何差异之前返回。
        """
        trace = MappingTrace(record.cve_id, record.tpl_name or repo.name)
        counting = _CountingRepo(repo)
        record.patch_commit = None
        record.patch_url = None
        try:
            elements = parse_vulnerable_elements(record.description, self.description_oracle)
            record.vulnerable_elements = elements
            if elements.is_empty():
                raise NoElements(record.cve_id)

            window = self.search_window(record, tags if tags is not None else repo.list_tags())
            if window is None:
                trace.reason = "no-versions"
                record.mapping_reason = trace.reason
                return trace
            (last_tag, t0), (fixed_tag, t1) = window
            trace.window = (format_timestamp(t0), format_timestamp(t1))
            trace.tags = (last_tag, fixed_tag)

            commits = repo.commits_between(t0, t1)
            trace.commits = len(commits)
            slices = slice_commits(commits, self.k)
            trace.slices = len(slices)
            trace.last_slice_size = slices[-1].size

            candidate_slices = filter_candidate_slices(slices, elements, counting)  # type: ignore[arg-type]
            trace.candidate_slices = [s.index for s in candidate_slices]
            for s in candidate_slices:
                trace.candidate_commits.extend(select_candidate_commits(s, elements, counting))  # type: ignore[arg-type]
            if not trace.candidate_commits:
                trace.reason = "no-candidates"
            else:
                trace.confirmed = confirm_patch_commit(record, trace.candidate_commits, self.relevance_oracle, repo)
                trace.reason = "mapped" if trace.confirmed else "not-confirmed"
        except NoElements:
            trace.reason = "no-elements"
        except EmptyRange:
            trace.reason = "empty-range"
        except RepoUnavailable:
            trace.reason = "repo-unavailable"
        except DiffFailed as e:
            logger.warning(f"{record.cve_id}: git 命令失败: {e.message}")
            trace.reason = "diff-failed"
        finally:
            trace.diffs_computed = counting.diffs

        record.mapping_reason = trace.reason
        if trace.confirmed:
            record.patch_commit = trace.confirmed
            url = repo.remote_url()
            record.patch_url = f"{url.rstrip('/')}/commit/{trace.confirmed}" if url else None
            try:
                record.patch_code = extract_patch_code(repo, trace.confirmed)
            except DiffFailed:
                logger.warning(f"{record.cve_id}: 无法提取补丁代码")
        logger.info(f"{record.cve_id}: {trace.reason}" + (f" {trace.confirmed[:12]}" if trace.confirmed else ""))
        return trace


# ---------------------------------------------------------------- 持久化


def persist_vulnerability_segment(records: Iterable[CveRecord], path: Union[str, Path]):
    """
    把漏洞段写为 JSON-Lines，首行 {"schema_version":1,"segment":"vulnerability"}，记录按 (tpl, cve_id) 排序

    Raises:
        DatabaseIOError: 写入失败
    """
    lines = [dumps_line({"schema_version": SCHEMA_VERSION, "segment": SEGMENT_NAME})]
    lines.extend(dumps_line(r.to_dict()) for r in sorted(records, key=lambda r: (r.tpl_name, r.cve_id)))
    target = Path(path)
    try:
        ensure_directory(target.parent)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise DatabaseIOError(f"Failed to write segment: {e}", path=str(target)) from e
    logger.info(f"漏洞段已保存到: {target}")


def load_vulnerability_segment(path: Union[str, Path]) -> List[CveRecord]:
    """
    加载漏洞段

    Raises:
        DatabaseIOError: 读取失败或格式错误
        SchemaVersionMismatch: schema_version 不受支持
    """
    try:
        return [CveRecord.from_dict(row) for row in read_segment_lines(path, SEGMENT_NAME)]
    except (KeyError, ValueError, TypeError) as e:
        raise DatabaseIOError(f"Malformed vulnerability record: {e}", path=str(path)) from e
