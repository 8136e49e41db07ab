"""
pyvulture 组件段模块

组件段保存所选第三方库（TPL）每个版本的函数指纹 fc = <H, Birth>：
H 为规范化函数体的模糊摘要，Birth 为该函数第一次出现在历史中的时间。

主要功能：
- select_tpls: 按平台关键词与排除关键词筛选仓库
- build_version_records: 遍历仓库标签，计算每个版本的函数指纹
- eliminate_redundancy: 基于哈希索引的冗余消除，相同摘要只保留出生最早的函数
- persist_segment / load_segment: JSON-Lines 持久化

使用示例：
    >>> records = build_version_records(open_repo("zlib.json", "fixture"))
    >>> segment = eliminate_redundancy(build_segment({"zlib": records}))
    >>> persist_segment(segment, "db/component.jsonl")
"""

import json
import re
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .exceptions import DatabaseIOError, SchemaVersionMismatch, TagCheckoutFailed
from .fingerprint import FuzzyDigest, digest
from .repo import GitRepoHandle
from .snippets import extract_snippets, normalize_text
from .types import RepoMetadata
from .utils import ensure_directory, format_timestamp, is_source_file, parse_timestamp

# 配置日志记录器
logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SEGMENT_NAME = "component"


@dataclass(frozen=True)
class FunctionFingerprint:
    """函数指纹 fc = <H, Birth>"""

    digest: FuzzyDigest
    birth: datetime
    origin_tpl: str
    origin_path: str
    name: str = ""

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.origin_tpl, self.origin_path, str(self.digest))

    def survivor_order(self) -> Tuple[datetime, str, str]:
        return (self.birth, self.origin_tpl, self.origin_path)


@dataclass
class TplVersionRecord:
    """一个TPL版本及其函数指纹集合 FC"""

    tpl_name: str
    version_tag: str
    publish_time: datetime
    fingerprints: List[FunctionFingerprint] = field(default_factory=list)

    @property
    def function_count(self) -> int:
        return len(self.fingerprints)


@dataclass
class EliminationStats:
    """冗余消除统计"""

    fingerprints: int = 0
    survivors: int = 0
    eliminated: int = 0
    comparisons: int = 0


@dataclass
class ComponentSegment:
    """组件段：tpl -> 版本记录列表，以及摘要 -> 幸存指纹的哈希索引"""

    tpls: Dict[str, List[TplVersionRecord]] = field(default_factory=dict)
    hash_index: Dict[str, FunctionFingerprint] = field(default_factory=dict)
    stats: EliminationStats = field(default_factory=EliminationStats, compare=False)

    def versions(self) -> Iterable[TplVersionRecord]:
        for tpl in sorted(self.tpls):
            yield from self.tpls[tpl]

    def distinct_fingerprints(self) -> List[FunctionFingerprint]:
        seen: Dict[Tuple[str, str, str], FunctionFingerprint] = {}
        for record in self.versions():
            for fp in record.fingerprints:
                seen.setdefault(fp.key, fp)
        return [seen[k] for k in sorted(seen)]

    def summary(self) -> Dict[str, int]:
        return {
            "tpls": len(self.tpls),
            "versions": sum(len(v) for v in self.tpls.values()),
            "fingerprints": len(self.hash_index),
            "eliminated": self.stats.eliminated,
        }


# ---------------------------------------------------------------- TPL 筛选


def _metadata_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple, set)):
        return " ".join(str(v) for v in value)
    return str(value)


def select_tpls(
    repo_metadata: Sequence[RepoMetadata],
    platform_keywords: Sequence[str],
    exclusion_keywords: Sequence[str],
    min_stars: int = 0,
) -> List[str]:
    """
    按关键词筛选平台相关的TPL

    平台关键词在标题、标签或描述中以不区分大小写的子串出现即命中；排除关键词在标题、标签、
    描述或 README 中以整词出现即排除；星标数低于 min_stars 的仓库不视为流行库。

    Returns:
        List[str]: 按输入顺序排列的入选仓库名
    """
    platform = [k.lower() for k in platform_keywords if k.strip()]
    exclusion = [re.compile(r"\b" + re.escape(k.lower()) + r"\b") for k in exclusion_keywords if k.strip()]
    selected = []
    for meta in repo_metadata:
        name = meta.get("name")
        if not name:
            continue
        searchable = " ".join(_metadata_text(meta.get(k)) for k in ("title", "tags", "description")).lower()
        if not any(k in searchable for k in platform):
            continue
        full_text = (searchable + " " + _metadata_text(meta.get("readme_text"))).lower()
        hit = next((p.pattern for p in exclusion if p.search(full_text)), None)
        if hit:
            logger.info(f"排除非库项目 {name}（命中 {hit}）")
            continue
        if int(meta.get("star_count") or 0) < min_stars:
            logger.info(f"跳过星标不足的仓库 {name}（{meta.get('star_count')} < {min_stars}）")
            continue
        selected.append(name)
    return selected


# ---------------------------------------------------------------- 版本记录


def build_version_records(repo: GitRepoHandle, tpl_name: Optional[str] = None) -> List[TplVersionRecord]:
    """
    为仓库的每个标签生成一条版本记录

    Birth 取最早定义该函数（路径+函数名）的提交时间；同一摘要在库历史中更早出现过时沿用更早的
    Birth，因此被移动到其他文件的函数保留原始出生时间。早于历史起点的函数记为首个提交的时间。

    Raises:
        RepoUnavailable: 仓库无法访问
    """
    tpl = tpl_name or repo.name
    tags = repo.list_tags()
    if not tags:
        logger.info(f"{tpl}: 没有标签")
        return []

    commits = repo.all_commits()
    initial_time = commits[0].timestamp if commits else tags[0][1]

    touch_cache: Dict[Tuple[str, str], Optional[datetime]] = {}
    earliest_by_digest: Dict[str, datetime] = {}
    fingerprint_cache: Dict[Tuple[str, str], FunctionFingerprint] = {}
    records: List[TplVersionRecord] = []

    for tag, published in tags:
        try:
            files = [p for p in repo.list_files(tag) if is_source_file(p)]
        except TagCheckoutFailed:
            logger.warning(f"{tpl}: 跳过标签 {tag}")
            continue

        fingerprints: Dict[Tuple[str, str], FunctionFingerprint] = {}
        for path in files:
            text = repo.file_at(tag, path)
            if text is None:
                continue
            for snippet in extract_snippets(text, path):
                if not snippet.is_function:
                    continue
                h = digest(normalize_text(snippet.body))
                key = (path, str(h))
                if key not in fingerprint_cache:
                    touch_key = (path, snippet.name)
                    if touch_key not in touch_cache:
                        touch_cache[touch_key] = repo.first_touch(path, snippet.name)
                    birth = touch_cache[touch_key] or initial_time
                    birth = min(birth, published, earliest_by_digest.get(str(h), birth))
                    earliest_by_digest[str(h)] = birth
                    fingerprint_cache[key] = FunctionFingerprint(h, birth, tpl, path, snippet.name)
                fingerprints.setdefault(key, fingerprint_cache[key])

        ordered = sorted(fingerprints.values(), key=lambda fp: (fp.origin_path, fp.name, str(fp.digest)))
        records.append(TplVersionRecord(tpl, tag, published, ordered))
        logger.debug(f"{tpl} {tag}: {len(ordered)} 个函数")

    return records


def build_segment(tpl_records: Dict[str, List[TplVersionRecord]]) -> ComponentSegment:
    """合并各TPL的版本记录（单写者），并建立哈希索引"""
    segment = ComponentSegment(tpls={tpl: list(tpl_records[tpl]) for tpl in sorted(tpl_records)})
    segment.hash_index = _earliest_by_digest(segment.distinct_fingerprints())
    return segment


def _earliest_by_digest(fingerprints: Iterable[FunctionFingerprint]) -> Dict[str, FunctionFingerprint]:
    index: Dict[str, FunctionFingerprint] = {}
    for fp in fingerprints:
        current = index.get(str(fp.digest))
        if current is None or fp.survivor_order() < current.survivor_order():
            index[str(fp.digest)] = fp
    return index


# ---------------------------------------------------------------- 冗余消除


def _apply_survivors(segment: ComponentSegment, survivors: Dict[str, FunctionFingerprint], stats: EliminationStats) -> ComponentSegment:
    tpls: Dict[str, List[TplVersionRecord]] = {}
    for tpl in sorted(segment.tpls):
        rebuilt = []
        for record in segment.tpls[tpl]:
            kept: Dict[Tuple[str, str, str], FunctionFingerprint] = {}
            for fp in record.fingerprints:
                survivor = survivors[str(fp.digest)]
                if survivor.origin_tpl == record.tpl_name:
                    kept.setdefault(survivor.key, survivor)
            ordered = sorted(kept.values(), key=lambda fp: (fp.origin_path, fp.name, str(fp.digest)))
            rebuilt.append(TplVersionRecord(record.tpl_name, record.version_tag, record.publish_time, ordered))
        tpls[tpl] = rebuilt
    return ComponentSegment(tpls=tpls, hash_index=dict(sorted(survivors.items())), stats=stats)


def eliminate_redundancy(segment: ComponentSegment) -> ComponentSegment:
    """
    哈希索引冗余消除

    一次哈希表遍历把摘要相同的指纹分组，每组只保留 Birth 最早的指纹（相同时取 (tpl, path)
    字典序最小者）。其他TPL版本记录中的该摘要被删除，所属TPL的版本记录指向幸存者。
    每个指纹至多一次查表和一次比较。
    """
    stats = EliminationStats()
    survivors: Dict[str, FunctionFingerprint] = {}
    distinct = segment.distinct_fingerprints()
    for fp in distinct:
        stats.comparisons += 1
        key = str(fp.digest)
        current = survivors.get(key)
        if current is None:
            survivors[key] = fp
            continue
        stats.comparisons += 1
        if fp.survivor_order() < current.survivor_order():
            survivors[key] = fp

    stats.fingerprints = len(distinct)
    stats.survivors = len(survivors)
    stats.eliminated = stats.fingerprints - stats.survivors
    logger.info(
        f"冗余消除: {stats.fingerprints} 个指纹，保留 {stats.survivors}，消除 {stats.eliminated}，"
        f"比较 {stats.comparisons} 次"
    )
    return _apply_survivors(segment, survivors, stats)


# ---------------------------------------------------------------- 持久化


def dumps_line(obj) -> str:
    """紧凑、键排序的单行JSON"""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def persist_segment(segment: ComponentSegment, path: Union[str, Path]):
    """
    把组件段写为 JSON-Lines

    首行为 {"schema_version":1,"segment":"component"}，随后每个版本一行
    {"tpl","version","published"}，再接该版本的指纹行 {"tpl","version","digest","birth","path","name"}。

    Raises:
        DatabaseIOError: 写入失败
    """
    lines = [dumps_line({"schema_version": SCHEMA_VERSION, "segment": SEGMENT_NAME})]
    for record in segment.versions():
        lines.append(dumps_line({"tpl": record.tpl_name, "version": record.version_tag, "published": format_timestamp(record.publish_time)}))
        for fp in record.fingerprints:
            lines.append(
                dumps_line(
                    {
                        "tpl": fp.origin_tpl,
                        "version": record.version_tag,
                        "digest": str(fp.digest),
                        "birth": format_timestamp(fp.birth),
                        "path": fp.origin_path,
                        "name": fp.name,
                    }
                )
            )
    target = Path(path)
    try:
        ensure_directory(target.parent)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise DatabaseIOError(f"Failed to write segment: {e}", path=str(target)) from e
    logger.info(f"组件段已保存到: {target}")


def read_segment_lines(path: Union[str, Path], segment_name: str) -> List[dict]:
    """读取段文件并校验首行，返回其余各行"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw_lines = [line for line in f.read().splitlines() if line.strip()]
    except OSError as e:
        raise DatabaseIOError(f"Failed to read segment: {e}", path=str(path)) from e
    if not raw_lines:
        raise DatabaseIOError("Segment file is empty", path=str(path))
    try:
        header = json.loads(raw_lines[0])
        rows = [json.loads(line) for line in raw_lines[1:]]
    except ValueError as e:
        raise DatabaseIOError(f"Malformed segment file: {e}", path=str(path)) from e
    if not isinstance(header, dict) or header.get("segment") != segment_name:
        raise DatabaseIOError(f"Not a {segment_name} segment", path=str(path))
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(str(path), header.get("schema_version"), SCHEMA_VERSION)
    return rows


def load_segment(path: Union[str, Path]) -> ComponentSegment:
    """
    加载组件段

    Raises:
        DatabaseIOError: 读取失败或格式错误
        SchemaVersionMismatch: schema_version 不受支持
    """
    tpls: Dict[str, List[TplVersionRecord]] = {}
    by_version: Dict[Tuple[str, str], TplVersionRecord] = {}
    shared: Dict[Tuple[str, str, str], FunctionFingerprint] = {}
    try:
        for row in read_segment_lines(path, SEGMENT_NAME):
            key = (row["tpl"], row["version"])
            if "digest" not in row:
                record = TplVersionRecord(row["tpl"], row["version"], parse_timestamp(row["published"]))
                tpls.setdefault(row["tpl"], []).append(record)
                by_version[key] = record
                continue
            fp = FunctionFingerprint(
                FuzzyDigest.parse(row["digest"]), parse_timestamp(row["birth"]), row["tpl"], row["path"], row.get("name", "")
            )
            fp = shared.setdefault(fp.key, fp)
            by_version[key].fingerprints.append(fp)
    except (KeyError, ValueError) as e:
        raise DatabaseIOError(f"Malformed segment record: {e}", path=str(path)) from e

    segment = ComponentSegment(tpls={t: tpls[t] for t in sorted(tpls)})
    segment.hash_index = dict(sorted(_earliest_by_digest(segment.distinct_fingerprints()).items()))
    segment.stats.survivors = len(segment.hash_index)
    return segment
