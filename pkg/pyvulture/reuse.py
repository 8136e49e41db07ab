"""
pyvulture TPL复用识别模块

主要功能：
- fingerprint_target: 为目标源码树中的每个函数生成 <Hash, Func_path> 记录
- detect_candidates: 基于模糊摘要距离检测候选TPL及其主流版本
- jaccard_path_score: 路径记号与TPL名的 Jaccard 相似度
- resolve_reuses: 按路径得分与出生时间消除误报，生成复用报告

使用示例：
    >>> target = fingerprint_target("firmware/src")
    >>> candidates = detect_candidates(target.functions, segment, th_hash=30, th_sim=0.10)
    >>> report = resolve_reuses(candidates, target_id=target.target_id)
    >>> print(report.render_table())
"""

import random
import re
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from .component import ComponentSegment, FunctionFingerprint
from .fingerprint import FuzzyDigest, comparable, digest, distance
from .parallel import ParallelExecutor
from .snippets import SourceSnippet, extract_normalized
from .utils import DisjointSet, format_timestamp, iter_source_files, read_text

# 配置日志记录器
logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
_TOKEN_SPLIT_RE = re.compile(r"[\s/\\:.\-_]+")
# 每个并行任务处理的目标函数数
TARGET_CHUNK_SIZE = 256


@dataclass(frozen=True)
class TargetSnippet:
    """目标程序中一个函数的记录 ft = <Hash, Func_path>"""

    digest: FuzzyDigest
    path: str
    name: str
    line_span: Tuple[int, int] = (1, 1)


@dataclass
class TargetProgram:
    """扫描目标：规范化后的全部片段与函数记录"""

    target_id: str
    snippets: List[SourceSnippet] = field(default_factory=list)
    functions: List[TargetSnippet] = field(default_factory=list)
    sources: Dict[str, str] = field(default_factory=dict)

    @property
    def decls(self) -> List[SourceSnippet]:
        return [s for s in self.snippets if not s.is_function]


def fingerprint_target(root: Union[str, Path], target_id: Optional[str] = None) -> TargetProgram:
    """遍历目标目录中的C/C++文件，提取并规范化片段，为每个函数计算摘要"""
    root_path = Path(root)
    program = TargetProgram(target_id or root_path.resolve().name)
    for rel_path, full_path in iter_source_files(root_path):
        text = read_text(full_path)
        program.sources[rel_path] = text
        for snippet in extract_normalized(text, rel_path):
            program.snippets.append(snippet)
            if snippet.is_function:
                program.functions.append(
                    TargetSnippet(digest(snippet.normalized_body), rel_path, snippet.name, snippet.line_span)
                )
    logger.info(f"目标 {program.target_id}: {len(program.sources)} 个文件，{len(program.functions)} 个函数")
    return program


# ---------------------------------------------------------------- 候选检测


@dataclass(frozen=True)
class ReuseCandidate:
    """候选复用：一个TPL及其主流版本"""

    tpl_name: str
    version: str
    similar_pairs: int
    matched_paths: FrozenSet[str]
    birth: datetime
    evidence: FrozenSet[str] = frozenset()  # 匹配到的目标函数摘要
    matched_digests: FrozenSet[str] = frozenset()  # 匹配到的组件段摘要

    def __post_init__(self):
        if self.similar_pairs < 1:
            raise ValueError("a reuse candidate needs at least one similar pair")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tpl": self.tpl_name,
            "version": self.version,
            "similar_pairs": self.similar_pairs,
            "birth": format_timestamp(self.birth),
            "paths": sorted(self.matched_paths),
        }


def _match_chunk(job: Tuple[Sequence[TargetSnippet], Sequence[FunctionFingerprint], Dict[str, int], int]) -> List[Tuple[int, int]]:
    """返回 (目标函数下标, 段指纹下标) 的相似对"""
    targets, survivors, exact_index, th_hash = job
    pairs = []
    for t_index, target in enumerate(targets):
        if not target.digest.is_fuzzy:
            # ExactHash 只能与相同摘要匹配
            hit = exact_index.get(str(target.digest))
            if hit is not None:
                pairs.append((t_index, hit))
            continue
        for f_index, fp in enumerate(survivors):
            if not comparable(target.digest, fp.digest):
                continue
            if distance(target.digest, fp.digest) < th_hash:
                pairs.append((t_index, f_index))
    return pairs


def detect_candidates(
    target: Sequence[TargetSnippet],
    segment: ComponentSegment,
    th_hash: int = 30,
    th_sim: float = 0.10,
    seed: int = 0,
    executor: Optional[ParallelExecutor] = None,
) -> List[ReuseCandidate]:
    """
    检测候选TPL

    距离小于 th_hash 的 (目标函数, 段指纹) 为相似对；某TPL版本的相似对数除以该版本函数数大于
    th_sim 时为候选版本，每个TPL取相似对最多的候选版本（平局时用 seed 初始化的随机数选择）。

    Returns:
        List[ReuseCandidate]: 按TPL名排序
    """
    survivors = [segment.hash_index[k] for k in sorted(segment.hash_index)]
    exact_index = {str(fp.digest): i for i, fp in enumerate(survivors) if not fp.digest.is_fuzzy}
    chunks = [list(target[i : i + TARGET_CHUNK_SIZE]) for i in range(0, len(target), TARGET_CHUNK_SIZE)]
    jobs = [(chunk, survivors, exact_index, th_hash) for chunk in chunks]
    results = (executor or ParallelExecutor()).map(_match_chunk, jobs)

    # 段指纹 -> 匹配到它的目标函数
    matches: Dict[Tuple[str, str, str], List[TargetSnippet]] = {}
    for chunk, pairs in zip(chunks, results):
        for t_index, f_index in pairs:
            matches.setdefault(survivors[f_index].key, []).append(chunk[t_index])
    logger.debug(f"相似对: {sum(len(v) for v in matches.values())}")

    rng = random.Random(seed)
    candidates = []
    for tpl in sorted(segment.tpls):
        passing = []
        for record in segment.tpls[tpl]:
            if not record.function_count:
                continue
            pairs = sum(len(matches.get(fp.key, ())) for fp in record.fingerprints)
            if pairs and pairs / record.function_count > th_sim:
                passing.append((record, pairs))
        if not passing:
            continue
        best = max(pairs for _, pairs in passing)
        tied = [record for record, pairs in passing if pairs == best]
        chosen = tied[0] if len(tied) == 1 else rng.choice(tied)
        if len(tied) > 1:
            logger.debug(f"{tpl}: {len(tied)} 个版本平局，选择 {chosen.version_tag}")

        matched = [(fp, t) for fp in chosen.fingerprints for t in matches.get(fp.key, ())]
        candidates.append(
            ReuseCandidate(
                tpl_name=tpl,
                version=chosen.version_tag,
                similar_pairs=best,
                matched_paths=frozenset(t.path for _, t in matched),
                birth=min(fp.birth for fp, _ in matched),
                evidence=frozenset(str(t.digest) for _, t in matched),
                matched_digests=frozenset(str(fp.digest) for fp, _ in matched),
            )
        )
    logger.info(f"候选TPL: {', '.join(c.tpl_name for c in candidates) or '无'}")
    return candidates


# ---------------------------------------------------------------- 误报消除


def _tokens(text: str) -> FrozenSet[str]:
    return frozenset(t for t in _TOKEN_SPLIT_RE.split(text.lower()) if t)


def jaccard_path_score(func_path: str, tpl_name: str) -> float:
    """路径记号集合与TPL名记号集合的 Jaccard 相似度"""
    a, b = _tokens(func_path), _tokens(tpl_name)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


@dataclass
class ReuseReport:
    """TPL复用报告"""

    target_id: str
    confirmed: List[ReuseCandidate] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "target": self.target_id,
            "reuses": [c.to_dict() for c in self.confirmed],
        }

    def render_table(self) -> str:
        if not self.confirmed:
            return f"{self.target_id}: no TPL reuse detected"
        rows = [("TPL", "VERSION", "PAIRS", "BIRTH", "PATHS")]
        for c in self.confirmed:
            rows.append((c.tpl_name, c.version, str(c.similar_pairs), format_timestamp(c.birth), str(len(c.matched_paths))))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def resolve_reuses(candidates: Sequence[ReuseCandidate], target_id: str = "") -> ReuseReport:
    """
    消除误报

    1. 按匹配路径分组，组内只保留路径与TPL名 Jaccard 得分最高的候选（可能并列）；
       至少在一个组中胜出的候选进入下一步
    2. 共享任一相同证据摘要（传递闭包）的候选中只保留出生最早者，相同时取TPL名最小者

    结果与候选的输入顺序无关。
    """
    ordered = sorted(candidates, key=lambda c: (c.tpl_name, c.version))
    winners = set()
    all_paths = sorted({p for c in ordered for p in c.matched_paths})
    for path in all_paths:
        group = [c for c in ordered if path in c.matched_paths]
        scores = {c.tpl_name: jaccard_path_score(path, c.tpl_name) for c in group}
        top = max(scores.values())
        winners.update(name for name, score in scores.items() if score == top)
    survivors = [c for c in ordered if c.tpl_name in winners]
    dropped = [c.tpl_name for c in ordered if c.tpl_name not in winners]
    if dropped:
        logger.info(f"路径得分消除: {', '.join(dropped)}")

    ds = DisjointSet(len(survivors))
    owner: Dict[str, int] = {}
    for i, c in enumerate(survivors):
        for evidence in sorted(c.evidence):
            if evidence in owner:
                ds.merge(owner[evidence], i)
            else:
                owner[evidence] = i

    confirmed = []
    for group in ds.groups():
        parent = min((survivors[i] for i in group), key=lambda c: (c.birth, c.tpl_name))
        confirmed.append(parent)
        others = [survivors[i].tpl_name for i in group if survivors[i] is not parent]
        if others:
            logger.info(f"出生时间消除: 保留 {parent.tpl_name}，移除 {', '.join(others)}")
    confirmed.sort(key=lambda c: c.tpl_name)
    return ReuseReport(target_id=target_id, confirmed=confirmed)
