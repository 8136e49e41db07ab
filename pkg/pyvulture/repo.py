"""
pyvulture 仓库访问模块

把对 git 历史的访问抽象为 GitRepoHandle，提供两种实现：
- SubprocessRepo: 通过 subprocess 调用 git 命令行
- FixtureRepo: 从 JSON 清单加载的线性合成历史，用于测试与离线演示

清单格式：
    {"name": "...", "url": "...",
     "commits": [{"hash": "...", "timestamp": "2013-05-17T16:41:42Z", "message": "...",
                  "files": {"path": "full text"}, "deleted": ["path"]}],
     "tags": [{"name": "v1.0", "commit": "<hash>"}]}

使用示例：
    >>> repo = open_repo("fixtures/zlib.json", mode="fixture")
    >>> tags = repo.list_tags()
    >>> hunks = parse_unified_diff(repo.diff_of(repo.tag_commit(tags[-1][0])))
"""

import abc
import difflib
import json
import re
import shutil
import subprocess
import tempfile
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .exceptions import DiffFailed, RepoUnavailable, TagCheckoutFailed
from .snippets import extract_snippets
from .types import RepoMode
from .utils import format_timestamp, parse_timestamp

# 配置日志记录器
logger = logging.getLogger(__name__)

EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


@dataclass(frozen=True)
class CommitInfo:
    """提交元数据"""

    hash: str
    timestamp: datetime
    message: str = ""


@dataclass
class DiffHunk:
    """统一差异格式中的一个片段"""

    old_path: Optional[str]
    new_path: Optional[str]
    old_start: int
    new_start: int
    section: str = ""  # @@ 行尾部的上下文（git 给出的函数名）
    lines: List[Tuple[str, str]] = field(default_factory=list)  # (' '|'+'|'-', 文本)

    @property
    def path(self) -> str:
        return self.new_path or self.old_path or ""

    @property
    def added(self) -> List[str]:
        return [text for tag, text in self.lines if tag == "+"]

    @property
    def deleted(self) -> List[str]:
        return [text for tag, text in self.lines if tag == "-"]

    @property
    def changed(self) -> List[str]:
        return [text for tag, text in self.lines if tag != " "]

    def changed_line_numbers(self) -> Tuple[List[int], List[int]]:
        """返回 (旧文件中被删除的行号, 新文件中新增的行号)"""
        deleted, added = [], []
        old_no, new_no = self.old_start, self.new_start
        for tag, _ in self.lines:
            if tag == "-":
                deleted.append(old_no)
                old_no += 1
            elif tag == "+":
                added.append(new_no)
                new_no += 1
            else:
                old_no += 1
                new_no += 1
        return deleted, added


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@ ?(.*)$")


def _strip_diff_path(raw: str) -> Optional[str]:
    raw = raw.split("\t")[0].strip()
    if raw == "/dev/null":
        return None
    if raw.startswith(("a/", "b/")):
        return raw[2:]
    return raw


def parse_unified_diff(text: str) -> List[DiffHunk]:
    """
    解析统一差异文本

    依据 @@ 行中的行数判断片段结束，因此片段内以 "+++" 或 "---" 开头的代码行不会被误认为文件头。

    Args:
        text: git diff 或 difflib 生成的差异文本

    Returns:
        List[DiffHunk]: 按出现顺序排列的片段
    """
    hunks: List[DiffHunk] = []
    old_path: Optional[str] = None
    new_path: Optional[str] = None
    current: Optional[DiffHunk] = None
    old_left = new_left = 0

    for line in text.splitlines():
        if current is not None and (old_left > 0 or new_left > 0):
            if line.startswith("\\"):
                continue
            tag, body = (line[0], line[1:]) if line else (" ", "")
            if tag not in " +-":
                tag, body = " ", line
            current.lines.append((tag, body))
            if tag != "+":
                old_left -= 1
            if tag != "-":
                new_left -= 1
            continue

        if line.startswith("\\"):
            continue
        if line.startswith("diff --git"):
            parts = line.split(" ")
            old_path = _strip_diff_path(parts[2]) if len(parts) > 3 else None
            new_path = _strip_diff_path(parts[3]) if len(parts) > 3 else None
            current = None
        elif line.startswith("--- "):
            old_path = _strip_diff_path(line[4:])
        elif line.startswith("+++ "):
            new_path = _strip_diff_path(line[4:])
        else:
            m = _HUNK_RE.match(line)
            if m:
                old_left = int(m.group(2)) if m.group(2) is not None else 1
                new_left = int(m.group(4)) if m.group(4) is not None else 1
                current = DiffHunk(
                    old_path=old_path,
                    new_path=new_path,
                    old_start=int(m.group(1)),
                    new_start=int(m.group(3)),
                    section=m.group(5).strip(),
                )
                hunks.append(current)
    return hunks


def render_unified_diff(old: Dict[str, str], new: Dict[str, str]) -> str:
    """用 difflib 渲染两个文件快照之间的差异"""
    out: List[str] = []
    for path in sorted(set(old) | set(new)):
        before, after = old.get(path), new.get(path)
        if before == after:
            continue
        out.append(f"diff --git a/{path} b/{path}")
        fromfile = f"a/{path}" if before is not None else "/dev/null"
        tofile = f"b/{path}" if after is not None else "/dev/null"
        out.extend(
            difflib.unified_diff(
                (before or "").splitlines(),
                (after or "").splitlines(),
                fromfile=fromfile,
                tofile=tofile,
                lineterm="",
            )
        )
    return "\n".join(out) + ("\n" if out else "")


class GitRepoHandle(abc.ABC):
    """
    git 仓库访问接口

    实现需保证 commits_between 严格按时间排序，diff(a, a) 为空。
    """

    name: str = ""
    location: str = ""

    @abc.abstractmethod
    def list_tags(self) -> List[Tuple[str, datetime]]:
        """按发布时间排序的 (标签, 时间)"""

    @abc.abstractmethod
    def tag_commit(self, tag: str) -> str:
        """标签指向的提交"""

    @abc.abstractmethod
    def all_commits(self) -> List[CommitInfo]:
        """按时间升序排列的全部提交"""

    @abc.abstractmethod
    def diff(self, commit_a: Optional[str], commit_b: str) -> str:
        """commit_a 到 commit_b 的统一差异，commit_a 为None表示空树"""

    @abc.abstractmethod
    def parent(self, commit: str) -> Optional[str]:
        """第一父提交，根提交返回None"""

    @abc.abstractmethod
    def file_at(self, ref: str, path: str) -> Optional[str]:
        """ref（标签或提交）下的文件内容，不存在时返回None"""

    @abc.abstractmethod
    def list_files(self, ref: str) -> List[str]:
        """ref 下的全部文件路径（排序）"""

    @abc.abstractmethod
    def path_history(self, path: str) -> List[CommitInfo]:
        """修改过 path 的提交，按时间升序"""

    def remote_url(self) -> Optional[str]:
        return None

    def close(self):
        """释放句柄持有的资源"""

    def __enter__(self) -> "GitRepoHandle":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def commits_between(self, t0: Optional[datetime], t1: datetime) -> List[CommitInfo]:
        """时间落在 (t0, t1] 内的提交，按时间升序"""
        return [c for c in self.all_commits() if (t0 is None or c.timestamp > t0) and c.timestamp <= t1]

    def diff_of(self, commit: str) -> str:
        """单个提交引入的差异"""
        return self.diff(self.parent(commit), commit)

    def commit_message(self, commit: str) -> str:
        for info in self.all_commits():
            if info.hash == commit:
                return info.message
        return ""

    def first_touch(self, path: str, symbol: str) -> Optional[datetime]:
        """
        最早在 path 中定义函数 symbol 的提交时间

        Returns:
            提交时间；历史中从未出现时返回None
        """
        for commit in self.path_history(path):
            text = self.file_at(commit.hash, path)
            if text is None:
                continue
            if any(s.is_function and s.name == symbol for s in extract_snippets(text, path)):
                return commit.timestamp
        return None


class FixtureRepo(GitRepoHandle):
    """从 JSON 清单加载的合成线性历史"""

    def __init__(self, manifest: Dict[str, Any], location: str = "<memory>"):
        self.location = location
        self.name = manifest.get("name") or Path(location).stem
        self._url = manifest.get("url")
        self._commits: List[CommitInfo] = []
        self._changes: List[Tuple[Dict[str, str], List[str]]] = []
        self._index: Dict[str, int] = {}

        for i, raw in enumerate(manifest.get("commits", [])):
            info = CommitInfo(
                hash=str(raw["hash"]),
                timestamp=parse_timestamp(raw["timestamp"]),
                message=raw.get("message", ""),
            )
            if info.hash in self._index:
                raise RepoUnavailable(f"Duplicate commit {info.hash} in manifest", location=location)
            if self._commits and info.timestamp < self._commits[-1].timestamp:
                raise RepoUnavailable(f"Commit {info.hash} is out of time order", location=location)
            self._index[info.hash] = i
            self._commits.append(info)
            self._changes.append((dict(raw.get("files", {})), list(raw.get("deleted", []))))

        self._tags: Dict[str, str] = {}
        for tag in manifest.get("tags", []):
            if tag["commit"] not in self._index:
                raise RepoUnavailable(f"Tag {tag['name']} points to unknown commit", location=location)
            self._tags[tag["name"]] = tag["commit"]
        self._snapshots: Dict[int, Dict[str, str]] = {}

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "FixtureRepo":
        try:
            with open(path, "r", encoding="utf-8") as f:
                manifest = json.load(f)
        except (OSError, ValueError) as e:
            raise RepoUnavailable(f"Cannot load fixture manifest {path}: {e}", location=str(path)) from e
        return cls(manifest, location=str(path))

    def _snapshot(self, index: int) -> Dict[str, str]:
        if index < 0:
            return {}
        if index not in self._snapshots:
            start = max((i for i in self._snapshots if i < index), default=-1)
            tree = dict(self._snapshots.get(start, {}))
            for i in range(start + 1, index + 1):
                files, deleted = self._changes[i]
                tree.update(files)
                for path in deleted:
                    tree.pop(path, None)
            self._snapshots[index] = tree
        return self._snapshots[index]

    def _resolve(self, ref: str) -> int:
        commit = self._tags.get(ref, ref)
        if commit not in self._index:
            raise TagCheckoutFailed(ref, "unknown ref")
        return self._index[commit]

    def list_tags(self) -> List[Tuple[str, datetime]]:
        tags = [(name, self._commits[self._index[c]].timestamp) for name, c in self._tags.items()]
        return sorted(tags, key=lambda t: (t[1], self._index[self._tags[t[0]]], t[0]))

    def tag_commit(self, tag: str) -> str:
        return self._commits[self._resolve(tag)].hash

    def all_commits(self) -> List[CommitInfo]:
        return list(self._commits)

    def diff(self, commit_a: Optional[str], commit_b: str) -> str:
        try:
            old = self._snapshot(self._resolve(commit_a)) if commit_a is not None else {}
            new = self._snapshot(self._resolve(commit_b))
        except TagCheckoutFailed as e:
            raise DiffFailed(f"Cannot diff {commit_a}..{commit_b}: {e.message}", commits=[str(commit_a), commit_b]) from e
        return render_unified_diff(old, new)

    def parent(self, commit: str) -> Optional[str]:
        index = self._resolve(commit)
        return self._commits[index - 1].hash if index > 0 else None

    def file_at(self, ref: str, path: str) -> Optional[str]:
        return self._snapshot(self._resolve(ref)).get(path)

    def list_files(self, ref: str) -> List[str]:
        return sorted(self._snapshot(self._resolve(ref)))

    def path_history(self, path: str) -> List[CommitInfo]:
        return [c for c, (files, deleted) in zip(self._commits, self._changes) if path in files or path in deleted]

    def commit_message(self, commit: str) -> str:
        return self._commits[self._resolve(commit)].message

    def remote_url(self) -> Optional[str]:
        return self._url


class SubprocessRepo(GitRepoHandle):
    """
    通过 git 命令行访问的本地仓库

    owns_checkout 为True时目录是临时克隆，close() 时删除。
    """

    def __init__(self, location: Union[str, Path], timeout: float = 120.0, owns_checkout: bool = False):
        self.location = str(location)
        self.name = Path(self.location).name
        self.timeout = timeout
        self.owns_checkout = owns_checkout
        try:
            self._git("rev-parse", "--git-dir")
        except DiffFailed as e:
            raise RepoUnavailable(f"Not a git repository: {self.location}", location=self.location) from e
        self._commits: Optional[List[CommitInfo]] = None

    def _git(self, *args: str) -> str:
        cmd = ["git", "-C", self.location, *args]
        try:
            output = subprocess.check_output(cmd, stderr=subprocess.PIPE, timeout=self.timeout)
        except FileNotFoundError as e:
            raise RepoUnavailable("git executable not found", location=self.location) from e
        except subprocess.TimeoutExpired as e:
            raise DiffFailed(f"git {' '.join(args)} timed out after {self.timeout}s") from e
        except subprocess.CalledProcessError as e:
            stderr = (e.stderr or b"").decode("utf-8", errors="replace").strip()
            raise DiffFailed(f"git {' '.join(args)} failed: {stderr}") from e
        return output.decode("utf-8", errors="replace")

    def _log(self, *args: str) -> List[CommitInfo]:
        output = self._git("log", "--reverse", "--first-parent", "--format=%H%x1f%ct%x1f%B%x1e", *args)
        commits = []
        for record in output.split("\x1e"):
            record = record.strip("\n")
            if not record:
                continue
            commit_hash, ts, message = record.split("\x1f", 2)
            commits.append(CommitInfo(commit_hash, parse_timestamp(int(ts)), message.strip()))
        return commits

    def list_tags(self) -> List[Tuple[str, datetime]]:
        output = self._git("tag", "--list")
        tags = []
        for name in output.split():
            try:
                ts = self._git("log", "-1", "--format=%ct", f"{name}^{{commit}}").strip()
                tags.append((name, parse_timestamp(int(ts))))
            except DiffFailed as e:
                logger.warning(f"{self.name}: 跳过无法解析的标签 {name}: {e.message}")
        return sorted(tags, key=lambda t: (t[1], t[0]))

    def tag_commit(self, tag: str) -> str:
        try:
            return self._git("rev-parse", f"{tag}^{{commit}}").strip()
        except DiffFailed as e:
            raise TagCheckoutFailed(tag, e.message) from e

    def all_commits(self) -> List[CommitInfo]:
        if self._commits is None:
            self._commits = self._log("HEAD")
        return list(self._commits)

    def diff(self, commit_a: Optional[str], commit_b: str) -> str:
        return self._git("diff", "--no-color", "--no-ext-diff", "--no-renames", commit_a or EMPTY_TREE, commit_b)

    def parent(self, commit: str) -> Optional[str]:
        try:
            return self._git("rev-parse", f"{commit}^").strip()
        except DiffFailed:
            return None

    def file_at(self, ref: str, path: str) -> Optional[str]:
        try:
            return self._git("show", f"{ref}:{path}")
        except DiffFailed:
            return None

    def list_files(self, ref: str) -> List[str]:
        try:
            return sorted(self._git("ls-tree", "-r", "--name-only", ref).split("\n")[:-1])
        except DiffFailed as e:
            raise TagCheckoutFailed(ref, e.message) from e

    def path_history(self, path: str) -> List[CommitInfo]:
        return self._log("HEAD", "--", path)

    def commit_message(self, commit: str) -> str:
        return self._git("log", "-1", "--format=%B", commit).strip()

    def remote_url(self) -> Optional[str]:
        try:
            return self._git("config", "--get", "remote.origin.url").strip() or None
        except DiffFailed:
            return None

    def close(self):
        if self.owns_checkout:
            shutil.rmtree(self.location, ignore_errors=True)
            logger.debug(f"已删除临时克隆 {self.location}")
            self.owns_checkout = False


def _clone(url: str, timeout: float) -> str:
    target = tempfile.mkdtemp(prefix="pyvulture-")
    try:
        subprocess.check_output(["git", "clone", "--quiet", url, target], stderr=subprocess.PIPE, timeout=timeout)
    except (OSError, subprocess.SubprocessError) as e:
        shutil.rmtree(target, ignore_errors=True)
        raise RepoUnavailable(f"Failed to clone {url}: {e}", location=url) from e
    return target


def open_repo(location: Union[str, Path], mode: Union[str, RepoMode] = RepoMode.SUBPROCESS, timeout: float = 120.0) -> GitRepoHandle:
    """
    打开仓库

    Args:
        location: 本地路径、远程URL（subprocess模式）或清单文件（fixture模式）
        mode: 'subprocess' 或 'fixture'

    远程URL会克隆到临时目录，用完后调用 close() 或用 with 语句删除。

    Raises:
        RepoUnavailable: 路径不存在或无法读取
    """
    mode = RepoMode(mode) if not isinstance(mode, RepoMode) else mode
    location = str(location)
    if mode == RepoMode.FIXTURE:
        return FixtureRepo.from_file(location)
    if re.match(r"^(https?|git|ssh)://|^git@", location):
        checkout = _clone(location, timeout)
        try:
            return SubprocessRepo(checkout, timeout=timeout, owns_checkout=True)
        except RepoUnavailable:
            shutil.rmtree(checkout, ignore_errors=True)
            raise
    if not Path(location).is_dir():
        raise RepoUnavailable(f"Repository path does not exist: {location}", location=location)
    return SubprocessRepo(location, timeout=timeout)


def export_manifest(repo: GitRepoHandle) -> Dict[str, Any]:
    """把任意仓库句柄导出为 fixture 清单"""
    commits = []
    previous: Dict[str, str] = {}
    for info in repo.all_commits():
        current = {path: repo.file_at(info.hash, path) or "" for path in repo.list_files(info.hash)}
        changed = {p: text for p, text in current.items() if previous.get(p) != text}
        deleted = sorted(set(previous) - set(current))
        commits.append(
            {
                "hash": info.hash,
                "timestamp": format_timestamp(info.timestamp),
                "message": info.message,
                "files": dict(sorted(changed.items())),
                "deleted": deleted,
            }
        )
        previous = current
    tags = [{"name": name, "commit": repo.tag_commit(name)} for name, _ in repo.list_tags()]
    return {"name": repo.name, "url": repo.remote_url(), "commits": commits, "tags": tags}
