"""
pyvulture 代码块匹配模块

对定制复用（G4）做基于代码块的补丁存在性分析：

- LineDiff: 规范化代码行之间的差异，每个变更行带有所在一侧的 StatementFacts
- build_chunks: 用并查集把同一控制结构内、或共享变量的变更行合并为代码块
- match_chunks: 先做行匹配，失败后做操作匹配，得出 Patched / Vulnerable

使用示例：
    >>> diff_set = DiffSet.from_bodies(vulnerable_body, patched_body, target_body)
    >>> match_chunks(diff_set).verdict
    <Verdict.PATCHED: 'Patched'>
"""

import difflib
import re
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .exceptions import UnpairedChunk
from .snippets import normalize_text
from .statements import StatementFacts, annotate_body
from .types import Verdict
from .utils import DisjointSet

# 配置日志记录器
logger = logging.getLogger(__name__)

ADDED = "+"
DELETED = "-"

_PUNCTUATION_ONLY_RE = re.compile(r"^[\s{}();,\[\]]*$")


def is_punctuation_only(text: str) -> bool:
    return bool(_PUNCTUATION_ONLY_RE.match(text))


@dataclass(frozen=True)
class DiffLine:
    """一条变更行"""

    side: str  # "+" 或 "-"
    text: str
    lineno: int  # 所在一侧的行号（从1开始）
    facts: StatementFacts = field(default_factory=StatementFacts)
    hunk: int = 0


@dataclass(frozen=True)
class LineDiff:
    """规范化代码之间的行差异"""

    lines: Tuple[DiffLine, ...] = ()

    @property
    def added(self) -> List[str]:
        return [line.text for line in self.lines if line.side == ADDED]

    @property
    def deleted(self) -> List[str]:
        return [line.text for line in self.lines if line.side == DELETED]

    def is_empty(self) -> bool:
        return not self.lines

    @classmethod
    def between(cls, old_text: str, new_text: str) -> "LineDiff":
        """
        比较两段代码

        两侧先规范化，再用 SequenceMatcher 逐行比较；控制结构编号分别以 "-:" 和 "+:" 为前缀。
        """
        old_norm, new_norm = normalize_text(old_text), normalize_text(new_text)
        old_lines = old_norm.split("\n") if old_norm else []
        new_lines = new_norm.split("\n") if new_norm else []
        old_facts = annotate_body(old_norm, prefix="-:") if old_lines else []
        new_facts = annotate_body(new_norm, prefix="+:") if new_lines else []

        matcher = difflib.SequenceMatcher(None, old_lines, new_lines, autojunk=False)
        lines: List[DiffLine] = []
        hunk = 0
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag == "equal":
                continue
            hunk += 1
            for i in range(i1, i2):
                lines.append(DiffLine(DELETED, old_lines[i], i + 1, old_facts[i], hunk))
            for j in range(j1, j2):
                lines.append(DiffLine(ADDED, new_lines[j], j + 1, new_facts[j], hunk))
        return cls(tuple(lines))


@dataclass(frozen=True)
class Chunk:
    """一组相关的变更行"""

    id: str
    lines: Tuple[DiffLine, ...]
    variables: FrozenSet[str]
    operations: Tuple[str, ...]
    added_ops: Tuple[str, ...]
    deleted_ops: Tuple[str, ...]
    control_block_id: Optional[str] = None

    @property
    def added(self) -> List[str]:
        return [line.text for line in self.lines if line.side == ADDED]

    @property
    def deleted(self) -> List[str]:
        return [line.text for line in self.lines if line.side == DELETED]


def _same_control_block(a: StatementFacts, b: StatementFacts) -> bool:
    return a.control_block_id is not None and a.control_block_id == b.control_block_id and a.control_depth == b.control_depth


def build_chunks(diff: LineDiff, skip_punctuation: bool = False) -> List[Chunk]:
    """
    把变更行划分为代码块

    每行先自成一块；同一控制结构（编号与嵌套深度都相同）的两行合并，变量集合相交的两行合并。

    Args:
        diff: 行差异
        skip_punctuation: 为True时忽略只含括号与分隔符的行

    Returns:
        List[Chunk]: 按首行在差异中的位置排序，编号 C1, C2, ...
    """
    lines = [line for line in diff.lines if not (skip_punctuation and is_punctuation_only(line.text))]
    ds = DisjointSet(len(lines))
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            a, b = lines[i].facts, lines[j].facts
            if _same_control_block(a, b) or (a.variables & b.variables):
                ds.merge(i, j)

    chunks = []
    for number, group in enumerate(ds.groups(), 1):
        members = tuple(lines[i] for i in group)
        block_ids = {m.facts.control_block_id for m in members}
        chunks.append(
            Chunk(
                id=f"C{number}",
                lines=members,
                variables=frozenset().union(*(m.facts.variables for m in members)),
                operations=tuple(op for m in members for op in m.facts.operations),
                added_ops=tuple(op for m in members if m.side == ADDED for op in m.facts.operations),
                deleted_ops=tuple(op for m in members if m.side == DELETED for op in m.facts.operations),
                control_block_id=block_ids.pop() if len(block_ids) == 1 else None,
            )
        )
    return chunks


@dataclass(frozen=True)
class DiffSet:
    """三个差异：漏洞→补丁（vp）、漏洞→目标（vt）、补丁→目标（pt）"""

    diff_vp: LineDiff
    diff_vt: LineDiff
    diff_pt: LineDiff

    @classmethod
    def from_bodies(cls, vulnerable: str, patched: str, target: str) -> "DiffSet":
        return cls(
            LineDiff.between(vulnerable, patched),
            LineDiff.between(vulnerable, target),
            LineDiff.between(patched, target),
        )


@dataclass
class ChunkMatch:
    """代码块匹配结果"""

    verdict: Verdict
    method: str  # line | operation
    matched: List[str] = field(default_factory=list)
    unmatched: List[str] = field(default_factory=list)


def contains_sequence(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    """needle 是否为 haystack 的连续子序列"""
    n = len(needle)
    if n == 0:
        return True
    return any(tuple(haystack[i : i + n]) == tuple(needle) for i in range(len(haystack) - n + 1))


def line_match(diff_set: DiffSet) -> bool:
    """
    行匹配

    补丁新增的每一行都出现在 vt 的新增行中，补丁删除的每一行都出现在 vt 的删除行中，
    且这些行都不出现在 pt 的任何变更中。只含括号的行不参与比较。
    """
    vp_added = [t for t in diff_set.diff_vp.added if not is_punctuation_only(t)]
    vp_deleted = [t for t in diff_set.diff_vp.deleted if not is_punctuation_only(t)]
    if not vp_added and not vp_deleted:
        return False
    vt_added, vt_deleted = set(diff_set.diff_vt.added), set(diff_set.diff_vt.deleted)
    pt_changed = set(diff_set.diff_pt.added) | set(diff_set.diff_pt.deleted)
    return all(t in vt_added and t not in pt_changed for t in vp_added) and all(
        t in vt_deleted and t not in pt_changed for t in vp_deleted
    )


def _pair_by_variables(chunk: Chunk, others: Sequence[Chunk]) -> Optional[Chunk]:
    best, best_overlap = None, 0
    for other in others:
        overlap = len(chunk.variables & other.variables)
        if overlap > best_overlap:
            best, best_overlap = other, overlap
    return best


def _covers(vp_chunk: Chunk, vt_chunk: Chunk) -> bool:
    return contains_sequence(vt_chunk.added_ops, vp_chunk.added_ops) and contains_sequence(
        vt_chunk.deleted_ops, vp_chunk.deleted_ops
    )


def _net_present(vp_chunk: Chunk, pt_chunk: Chunk) -> bool:
    """目标相对补丁版本仍缺少补丁操作，或重新引入了被补丁删除的操作"""
    if vp_chunk.added_ops and contains_sequence(pt_chunk.deleted_ops, vp_chunk.added_ops):
        if not contains_sequence(pt_chunk.added_ops, vp_chunk.added_ops):
            return True
    if vp_chunk.deleted_ops and contains_sequence(pt_chunk.added_ops, vp_chunk.deleted_ops):
        if not contains_sequence(pt_chunk.deleted_ops, vp_chunk.deleted_ops):
            return True
    return False


def operation_match(diff_set: DiffSet) -> ChunkMatch:
    """
    操作匹配

    每个 vp 代码块按共享变量最多的原则与 vt、pt 中的代码块配对（不含变量的代码块与第一个包含其
    操作序列的代码块配对）。vp 代码块的操作序列须连续地出现在配对的 vt 代码块中，且不能作为
    净变化出现在配对的 pt 代码块中；找不到配对的 vt 代码块视为匹配失败。

    补丁只改动不含操作的行（如数组常量）时没有可比较的操作序列，行匹配已失败，结果为 Vulnerable。
    """
    vp_chunks = [c for c in build_chunks(diff_set.diff_vp, skip_punctuation=True) if c.added_ops or c.deleted_ops]
    if not vp_chunks:
        logger.debug("补丁代码块都不含操作，无法做操作匹配")
        return ChunkMatch(Verdict.VULNERABLE, "operation", [], [])
    vt_chunks = build_chunks(diff_set.diff_vt, skip_punctuation=True)
    pt_chunks = build_chunks(diff_set.diff_pt, skip_punctuation=True)

    matched: List[str] = []
    unmatched: List[str] = []
    for chunk in vp_chunks:
        if chunk.variables:
            vt_pair = _pair_by_variables(chunk, vt_chunks)
            pt_pair = _pair_by_variables(chunk, pt_chunks)
        else:
            vt_pair = next((c for c in vt_chunks if _covers(chunk, c)), None)
            pt_pair = next((c for c in pt_chunks if _net_present(chunk, c)), None)

        if vt_pair is None:
            logger.debug(UnpairedChunk(chunk.id).message)
            unmatched.append(chunk.id)
            continue
        if _covers(chunk, vt_pair) and (pt_pair is None or not _net_present(chunk, pt_pair)):
            matched.append(chunk.id)
        else:
            unmatched.append(chunk.id)

    patched = not unmatched
    return ChunkMatch(Verdict.PATCHED if patched else Verdict.VULNERABLE, "operation", matched, unmatched)


def match_chunks(diff_set: DiffSet) -> ChunkMatch:
    """
    判断目标是否已包含补丁

    行匹配成功即为 Patched；否则做操作匹配，所有补丁代码块都匹配时为 Patched，否则为 Vulnerable。
    """
    if line_match(diff_set):
        ids = [c.id for c in build_chunks(diff_set.diff_vp, skip_punctuation=True)]
        return ChunkMatch(Verdict.PATCHED, "line", ids, [])
    result = operation_match(diff_set)
    logger.debug(f"操作匹配: {result.verdict.value} matched={result.matched} unmatched={result.unmatched}")
    return result
