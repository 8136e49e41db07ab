"""
pyvulture 1-day漏洞检测模块

主要功能：
- version_diff: 定位补丁修改的函数与全局声明
- classify_reuse: 把复用归入 G1（安全复用）、G2（漏洞全局声明复用）、G3（精确漏洞复用）、
  G4（定制复用）
- check_global_decls: G2 的声明检查
- analyze_reuse: 对一个 (复用, CVE) 组合生成检测结果
- generate_report: 汇总为漏洞报告

使用示例：
    >>> findings = analyze_reuse(target, reuse, cve_record, th_hash=30)
    >>> report = generate_report(findings, vuln_records, target_id=target.target_id)
    >>> print(report.render_table())
"""

import difflib
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .chunks import DiffSet, LineDiff, is_punctuation_only, match_chunks
from .exceptions import OrphanHunk
from .fingerprint import FuzzyDigest, comparable, digest, distance
from .performance import monitor_performance
from .snippets import SourceSnippet, extract_normalized, normalize_lines
from .types import ReuseGroup, SourceFiles, Verdict

# 配置日志记录器
logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

ItemKey = Tuple[str, str, str]  # (path, kind, name)


def item_key(snippet: SourceSnippet) -> ItemKey:
    return (snippet.file_path, snippet.kind.value, snippet.name)


# ---------------------------------------------------------------- 版本差异


@dataclass
class VersionDiff:
    """补丁修改的代码项及其差异"""

    vuln_functions: Dict[ItemKey, SourceSnippet] = field(default_factory=dict)
    patched_functions: Dict[ItemKey, SourceSnippet] = field(default_factory=dict)
    vuln_decls: Dict[ItemKey, SourceSnippet] = field(default_factory=dict)
    patched_decls: Dict[ItemKey, SourceSnippet] = field(default_factory=dict)
    diff_vp: Dict[ItemKey, LineDiff] = field(default_factory=dict)
    orphans: List[OrphanHunk] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.vuln_functions or self.patched_functions or self.vuln_decls or self.patched_decls)

    def function_keys(self) -> List[ItemKey]:
        return sorted(set(self.vuln_functions) | set(self.patched_functions))

    def decl_keys(self) -> List[ItemKey]:
        return sorted(set(self.vuln_decls) | set(self.patched_decls))


def _changed_lines(old_text: str, new_text: str) -> Tuple[List[Tuple[int, str]], List[Tuple[int, str]]]:
    old_lines, new_lines = normalize_lines(old_text), normalize_lines(new_text)
    deleted, added = [], []
    matcher = difflib.SequenceMatcher(None, old_lines, new_lines, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        deleted.extend((i + 1, old_lines[i]) for i in range(i1, i2) if old_lines[i])
        added.extend((j + 1, new_lines[j]) for j in range(j1, j2) if new_lines[j])
    return deleted, added


def _owner(snippets: Sequence[SourceSnippet], lineno: int) -> Optional[SourceSnippet]:
    for s in snippets:
        if s.contains_line(lineno):
            return s
    return None


def version_diff(vulnerable_src: SourceFiles, patched_src: SourceFiles) -> VersionDiff:
    """
    定位补丁修改的代码项

    对每个文件比较两侧保持行号的规范化文本，把每条变更行归属到包含它的函数或全局声明；
    不属于任何片段的变更行记为 OrphanHunk 并排除。被修改的项在两侧都以完整片段记录。

    Args:
        vulnerable_src: 路径 -> 漏洞版本源码
        patched_src: 路径 -> 补丁版本源码
    """
    result = VersionDiff()
    for path in sorted(set(vulnerable_src) | set(patched_src)):
        old_text, new_text = vulnerable_src.get(path, ""), patched_src.get(path, "")
        before = extract_normalized(old_text, path) if old_text else []
        after = extract_normalized(new_text, path) if new_text else []
        deleted, added = _changed_lines(old_text, new_text)

        touched = set()
        for snippets, changes in ((before, deleted), (after, added)):
            for lineno, text in changes:
                owner = _owner(snippets, lineno)
                if owner is None:
                    result.orphans.append(OrphanHunk(path, lineno, text))
                else:
                    touched.add(item_key(owner))

        for side, snippets in (("vuln", before), ("patched", after)):
            for s in snippets:
                key = item_key(s)
                if key not in touched:
                    continue
                if s.is_function:
                    getattr(result, f"{side}_functions")[key] = s
                else:
                    getattr(result, f"{side}_decls")[key] = s

    for key in result.function_keys() + result.decl_keys():
        old = result.vuln_functions.get(key) or result.vuln_decls.get(key)
        new = result.patched_functions.get(key) or result.patched_decls.get(key)
        diff = LineDiff.between(old.normalized_body if old else "", new.normalized_body if new else "")
        if diff.is_empty():
            # 规范化后相同（只改了注释或空白）
            for table in (result.vuln_functions, result.patched_functions, result.vuln_decls, result.patched_decls):
                table.pop(key, None)
            continue
        result.diff_vp[key] = diff
    return result


# ---------------------------------------------------------------- 分组


@dataclass
class SnippetMatch:
    """目标片段与补丁项的配对"""

    target: SourceSnippet
    item: ItemKey
    group: ReuseGroup
    unanalyzed: bool = False


@dataclass
class ReuseClassification:
    """分组结果：group 为按优先级 G3 > G2 > G4 > G1 取最高的分组"""

    group: Optional[ReuseGroup]
    matches: List[SnippetMatch] = field(default_factory=list)


def _digest_of(snippet: SourceSnippet, cache: Dict[Tuple[str, str, Tuple[int, int]], FuzzyDigest]) -> FuzzyDigest:
    key = (snippet.file_path, snippet.name, snippet.line_span)
    if key not in cache:
        cache[key] = digest(snippet.normalized_body)
    return cache[key]


def _distance_or_none(a: FuzzyDigest, b: FuzzyDigest) -> Optional[int]:
    return distance(a, b) if comparable(a, b) else None


def classify_reuse(
    target_snippets: Sequence[SourceSnippet],
    vdiff: VersionDiff,
    th_hash: int = 30,
    digests: Optional[Dict[Tuple[str, str, Tuple[int, int]], FuzzyDigest]] = None,
) -> ReuseClassification:
    """
    对目标片段分组

    - G3: 目标函数摘要与漏洞函数摘要完全相同
    - G1: 目标函数或声明与补丁版本完全相同
    - G4: 目标函数与漏洞或补丁函数的距离小于 th_hash 但不完全相同；
      同名但不相似的函数记为 Unanalyzed
    - G2: 目标全局声明与漏洞声明完全相同

    每个完全相同的目标片段各自产生一条配对；G4 的目标片段只配对距离最近的补丁项
    （距离相同时取排序靠前的补丁项）。
    """
    cache = digests if digests is not None else {}
    functions = sorted((s for s in target_snippets if s.is_function), key=lambda s: (s.file_path, s.line_span))
    decls = sorted((s for s in target_snippets if not s.is_function), key=lambda s: (s.file_path, s.line_span))
    matches: List[SnippetMatch] = []
    exact_targets = set()
    nearest: Dict[int, Tuple[int, ItemKey]] = {}
    item_digests = []

    for key in vdiff.function_keys():
        vuln = vdiff.vuln_functions.get(key)
        patched = vdiff.patched_functions.get(key)
        item_digests.append(
            (key, digest(vuln.normalized_body) if vuln else None, digest(patched.normalized_body) if patched else None)
        )

    for key, v_digest, p_digest in item_digests:
        for index, t in enumerate(functions):
            t_digest = _digest_of(t, cache)
            if p_digest is not None and str(t_digest) == str(p_digest):
                matches.append(SnippetMatch(t, key, ReuseGroup.G1))
                exact_targets.add(index)
            elif v_digest is not None and str(t_digest) == str(v_digest):
                matches.append(SnippetMatch(t, key, ReuseGroup.G3))
                exact_targets.add(index)

    for key, v_digest, p_digest in item_digests:
        for index, t in enumerate(functions):
            if index in exact_targets:
                continue
            t_digest = _digest_of(t, cache)
            distances = [d for d in (_distance_or_none(t_digest, x) for x in (v_digest, p_digest) if x) if d is not None]
            if not distances or min(distances) >= th_hash:
                continue
            if index not in nearest or min(distances) < nearest[index][0]:
                nearest[index] = (min(distances), key)

    for index in sorted(nearest):
        matches.append(SnippetMatch(functions[index], nearest[index][1], ReuseGroup.G4))

    matched_items = {m.item for m in matches}
    for key, _, _ in item_digests:
        if key in matched_items:
            continue
        same_name = [t for t in functions if t.name == key[2]]
        if same_name:
            logger.info(f"{same_name[0].file_path}:{key[2]} 与补丁函数同名但不相似，无法分析")
            matches.append(SnippetMatch(same_name[0], key, ReuseGroup.G4, unanalyzed=True))

    for key in vdiff.decl_keys():
        vuln = vdiff.vuln_decls.get(key)
        patched = vdiff.patched_decls.get(key)
        for t in decls:
            if patched is not None and t.normalized_body == patched.normalized_body:
                matches.append(SnippetMatch(t, key, ReuseGroup.G1))
            elif vuln is not None and t.normalized_body == vuln.normalized_body:
                matches.append(SnippetMatch(t, key, ReuseGroup.G2))

    group = max((m.group for m in matches), key=lambda g: g.precedence, default=None)
    return ReuseClassification(group, matches)


def check_global_decls(target_decls: Sequence[SourceSnippet], diff_vp: Iterable[LineDiff]) -> Verdict:
    """
    G2 的声明检查

    补丁删除的声明行仍出现在目标中，或补丁新增的声明行不在目标中时为 Vulnerable，否则为 Patched。
    """
    present = {line for s in target_decls for line in s.normalized_body.split("\n")}
    for diff in diff_vp:
        for text in diff.deleted:
            if not is_punctuation_only(text) and text in present:
                return Verdict.VULNERABLE
        for text in diff.added:
            if not is_punctuation_only(text) and text not in present:
                return Verdict.VULNERABLE
    return Verdict.PATCHED


# ---------------------------------------------------------------- 检测结果


@dataclass
class VulnFinding:
    """一条检测结果；verdict 为 Secure 时 group 必为 G1，group 为 G3 时 verdict 必为 Vulnerable"""

    cve_id: str
    tpl_name: str
    group: ReuseGroup
    verdict: Verdict
    file: str
    line_span: Tuple[int, int]
    name: str = ""
    method: str = ""
    matched_chunks: List[str] = field(default_factory=list)
    unmatched_chunks: List[str] = field(default_factory=list)
    patch_commit: Optional[str] = None
    patch_url: Optional[str] = None

    def __post_init__(self):
        if self.verdict == Verdict.SECURE and self.group != ReuseGroup.G1:
            raise ValueError("a secure finding must be in group G1")
        if self.group == ReuseGroup.G3 and self.verdict != Verdict.VULNERABLE:
            raise ValueError("an exact vulnerable reuse is always vulnerable")

    @property
    def sort_key(self) -> Tuple[str, int, str, str]:
        return (self.file, self.line_span[0], self.cve_id, self.name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cve_id": self.cve_id,
            "tpl": self.tpl_name,
            "group": self.group.value,
            "verdict": self.verdict.value,
            "file": self.file,
            "lines": list(self.line_span),
            "name": self.name,
            "method": self.method,
            "evidence": {"matched": list(self.matched_chunks), "unmatched": list(self.unmatched_chunks)},
            "patch_commit": self.patch_commit,
            "patch_url": self.patch_url,
        }


@monitor_performance
def analyze_reuse(target, reuse, cve, th_hash: int = 30, digests=None) -> List[VulnFinding]:
    """
    对一个 (复用, CVE) 组合做版本差异分析与代码块分析

    Args:
        target: TargetProgram
        reuse: 已确认的 ReuseCandidate
        cve: 已映射补丁的 CveRecord
        th_hash: 距离阈值
        digests: 目标函数摘要缓存

    Returns:
        List[VulnFinding]: 每个配对片段一条结果
    """
    if not cve.patch_commit or not (cve.patch_code.get("vulnerable") or cve.patch_code.get("patched")):
        return []
    if digests is None:
        digests = {(t.path, t.name, t.line_span): t.digest for t in target.functions}
    vdiff = version_diff(cve.patch_code.get("vulnerable", {}), cve.patch_code.get("patched", {}))
    if vdiff.is_empty():
        return []

    classification = classify_reuse(target.snippets, vdiff, th_hash, digests)
    findings = []
    for match in classification.matches:
        method, matched, unmatched = "version", [], []
        if match.unanalyzed:
            verdict = Verdict.UNANALYZED
        elif match.group == ReuseGroup.G1:
            verdict = Verdict.SECURE
        elif match.group == ReuseGroup.G3:
            verdict = Verdict.VULNERABLE
        elif match.group == ReuseGroup.G2:
            verdict = check_global_decls(target.decls, [vdiff.diff_vp[match.item]])
            method = "declaration"
        else:
            vuln = vdiff.vuln_functions.get(match.item)
            patched = vdiff.patched_functions.get(match.item)
            diff_set = DiffSet.from_bodies(
                vuln.normalized_body if vuln else "",
                patched.normalized_body if patched else "",
                match.target.normalized_body,
            )
            chunk_match = match_chunks(diff_set)
            verdict, method = chunk_match.verdict, chunk_match.method
            matched, unmatched = chunk_match.matched, chunk_match.unmatched

        findings.append(
            VulnFinding(
                cve_id=cve.cve_id,
                tpl_name=reuse.tpl_name,
                group=match.group,
                verdict=verdict,
                file=match.target.file_path,
                line_span=match.target.line_span,
                name=match.target.name,
                method=method,
                matched_chunks=matched,
                unmatched_chunks=unmatched,
                patch_commit=cve.patch_commit,
                patch_url=cve.patch_url,
            )
        )
        logger.debug(f"{cve.cve_id} {match.target.file_path}:{match.target.name} -> {match.group.value}/{verdict.value}")
    return findings


@dataclass
class VulnReport:
    """漏洞报告，不含时间戳，相同输入得到字节相同的JSON"""

    target_id: str
    findings: List[VulnFinding] = field(default_factory=list)

    @property
    def vulnerable(self) -> List[VulnFinding]:
        return [f for f in self.findings if f.verdict == Verdict.VULNERABLE]

    @property
    def has_vulnerable(self) -> bool:
        return bool(self.vulnerable)

    def summary(self) -> Dict[str, int]:
        counts = {v.value: 0 for v in Verdict}
        for f in self.findings:
            counts[f.verdict.value] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "target": self.target_id,
            "summary": self.summary(),
            "findings": [f.to_dict() for f in self.findings],
        }

    def render_table(self) -> str:
        if not self.findings:
            return f"{self.target_id}: no 1-day vulnerability findings"
        rows = [("CVE", "TPL", "GROUP", "VERDICT", "LOCATION", "PATCH")]
        for f in self.findings:
            location = f"{f.file}:{f.line_span[0]}-{f.line_span[1]} {f.name}".rstrip()
            rows.append((f.cve_id, f.tpl_name, f.group.value, f.verdict.value, location, f.patch_url or f.patch_commit or "-"))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def generate_report(findings: Iterable[VulnFinding], vuln_segment: Iterable = (), target_id: str = "") -> VulnReport:
    """
    汇总检测结果

    缺少补丁链接的结果从漏洞段补全；结果按 (文件, 行号, CVE) 排序并去重。
    """
    by_id = {r.cve_id: r for r in vuln_segment}
    unique: Dict[Tuple[Any, ...], VulnFinding] = {}
    for f in findings:
        record = by_id.get(f.cve_id)
        if record is not None and f.patch_url is None:
            f.patch_url = record.patch_url
            f.patch_commit = f.patch_commit or record.patch_commit
        unique.setdefault((f.sort_key, f.tpl_name, f.group.value), f)
    ordered = [unique[k] for k in sorted(unique, key=lambda k: (k[0], k[1], k[2]))]
    return VulnReport(target_id=target_id, findings=ordered)
