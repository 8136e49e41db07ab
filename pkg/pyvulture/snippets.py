"""
pyvulture 源码片段模块

不依赖编译器，直接从C/C++源码中切分出顶层函数定义和全局声明（全局变量、结构体、宏），
并对片段做规范化：去掉注释、行首行尾空白和空行，把字符串常量替换为 "S"。

主要内容：
- SourceSnippet: 代码片段数据类
- parse_source / extract_snippets: 片段边界解析
- normalize / normalize_text / normalize_lines: 规范化

使用示例：
    >>> from pyvulture.snippets import extract_snippets, normalize
    >>> snippets = [normalize(s) for s in extract_snippets(source, "src/inflate.c")]
    >>> [(s.kind.value, s.name) for s in snippets]
    [('GlobalDecl', 'N'), ('Function', 'inflate')]
"""

import re
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from .exceptions import UnbalancedBraces
from .types import SnippetKind

# 配置日志记录器
logger = logging.getLogger(__name__)

STRING_PLACEHOLDER = '"S"'

# 不视为函数名的关键字（紧跟括号出现）
_NON_FUNCTION_WORDS = {
    "if", "for", "while", "switch", "return", "sizeof", "alignof", "typeof", "decltype",
    "__attribute__", "__declspec", "alignas", "__asm__", "asm", "catch", "do", "else",
    "throw", "noexcept", "defined", "_Static_assert", "static_assert",
}

_AGGREGATE_RE = re.compile(r"\b(struct|union|enum|class)\b(?:\s+(?:__attribute__\s*\(\(.*?\)\)\s*)?([A-Za-z_]\w*))?")
_TYPEDEF_RE = re.compile(r"\btypedef\b")
_EXTERN_C_RE = re.compile(r'^\s*extern\s*"S*"\s*$')
_NAMESPACE_RE = re.compile(r"^\s*(?:inline\s+)?namespace\b[\w:\s]*$")
_IDENT_BEFORE_PAREN_RE = re.compile(r"((?:operator\s*(?:\(\)|[^\s\w(]+))|[A-Za-z_~][\w:~]*)\s*$")
_IDENT_RE = re.compile(r"[A-Za-z_]\w*")
_DIRECTIVE_RE = re.compile(r"^\s*#\s*(\w+)\s*(.*)$", re.S)

# 参数列表之后允许出现的修饰
_TRAILER_PATTERNS = [
    re.compile(r"\s*(?:const|volatile|override|final|mutable)\b"),
    re.compile(r"\s*noexcept\b(?:\s*\([^()]*\))?"),
    re.compile(r"\s*throw\s*\([^()]*\)"),
    re.compile(r"\s*__attribute__\s*\(\((?:[^()]|\([^()]*\))*\)\)"),
    re.compile(r"\s*->\s*[\w:<>,\s\*&]+"),
    re.compile(r"\s*&&?"),
    re.compile(r"\s*=\s*0\b"),
    # K&R 风格的参数声明
    re.compile(r"\s*[A-Za-z_][\w\s\*,\[\]]*;"),
]
_CTOR_INIT_RE = re.compile(r"\s*:(?!:).*", re.S)


@dataclass(frozen=True)
class SourceSnippet:
    """代码片段：一个顶层函数定义或一个全局声明"""

    kind: SnippetKind
    name: str
    body: str
    file_path: str
    line_span: Tuple[int, int]
    normalized_body: str = ""

    def __post_init__(self):
        if self.line_span[0] > self.line_span[1]:
            raise ValueError(f"invalid line span {self.line_span}")

    @property
    def is_function(self) -> bool:
        return self.kind == SnippetKind.FUNCTION

    def contains_line(self, line: int) -> bool:
        return self.line_span[0] <= line <= self.line_span[1]


@dataclass
class ParseResult:
    """单个文件的解析结果"""

    snippets: List[SourceSnippet] = field(default_factory=list)
    warnings: List[UnbalancedBraces] = field(default_factory=list)


# ---------------------------------------------------------------- 词法扫描


def _lex(text: str) -> List[Tuple[str, int, int]]:
    """
    把源码切分为 code / line_comment / block_comment / string / char 段

    Returns:
        (类型, 起始偏移, 结束偏移) 列表，段首尾相接覆盖全文
    """
    segments: List[Tuple[str, int, int]] = []
    n = len(text)
    i = 0
    code_start = 0

    def flush(end: int):
        if end > code_start:
            segments.append(("code", code_start, end))

    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            flush(i)
            j = text.find("\n", i)
            j = n if j < 0 else j
            segments.append(("line_comment", i, j))
            i = code_start = j
        elif ch == "/" and nxt == "*":
            flush(i)
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            segments.append(("block_comment", i, j))
            i = code_start = j
        elif ch == '"' or (ch == "'" and not _is_digit_separator(text, i)):
            flush(i)
            j = i + 1
            while j < n and text[j] != ch:
                if text[j] == "\\":
                    j += 1
                elif text[j] == "\n" and text[j - 1] != "\\":
                    # 未闭合的字面量在行尾结束
                    break
                j += 1
            j = min(j + 1, n) if j < n and text[j] == ch else j
            segments.append(("string" if ch == '"' else "char", i, j))
            i = code_start = j
        else:
            i += 1
    flush(n)
    return segments


def _is_digit_separator(text: str, i: int) -> bool:
    # C++14 数字分隔符 1'000'000
    return 0 < i < len(text) - 1 and text[i - 1].isalnum() and text[i + 1].isalnum() and text[i - 1].isdigit()


def normalize_lines(text: str) -> List[str]:
    """
    保持行数不变的规范化

    注释被删除（跨行块注释保留换行），字符串常量替换为 "S"，每行去掉首尾空白，空行保留为 ""。
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    parts: List[str] = []
    for kind, start, end in _lex(text):
        chunk = text[start:end]
        if kind == "code" or kind == "char":
            parts.append(chunk)
        elif kind == "line_comment":
            continue
        elif kind == "block_comment":
            newlines = chunk.count("\n")
            parts.append("\n" * newlines if newlines else " ")
        else:
            parts.append(STRING_PLACEHOLDER + "\n" * chunk.count("\n"))
    return [line.strip() for line in "".join(parts).split("\n")]


def normalize_text(text: str) -> str:
    """规范化一段代码文本：删除注释、空白行和行首行尾空白，替换字符串常量"""
    return "\n".join(line for line in normalize_lines(text) if line)


def normalize(snippet: SourceSnippet) -> SourceSnippet:
    """返回填充了 normalized_body 的新片段（幂等）"""
    return replace(snippet, normalized_body=normalize_text(snippet.body))


def _mask(text: str) -> str:
    """注释替换为空格、字面量内容替换为 S，长度与换行位置保持不变"""
    out: List[str] = []
    for kind, start, end in _lex(text):
        chunk = text[start:end]
        if kind == "code":
            out.append(chunk)
        elif kind in ("line_comment", "block_comment"):
            out.append("".join("\n" if c == "\n" else " " for c in chunk))
        else:
            quote = chunk[0]
            inner = chunk[1:-1] if len(chunk) >= 2 and chunk[-1] == quote else chunk[1:]
            closing = quote if len(chunk) >= 2 and chunk[-1] == quote else ""
            out.append(quote + "".join("\n" if c == "\n" else "S" for c in inner) + closing)
    return "".join(out)


# ---------------------------------------------------------------- 边界解析


class _LineIndex:
    """偏移量到行号（从1开始）的映射"""

    def __init__(self, text: str):
        self._starts = [0]
        for m in re.finditer("\n", text):
            self._starts.append(m.end())

    def line_of(self, offset: int) -> int:
        lo, hi = 0, len(self._starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1


def _collect_directives(original: str, masked: str) -> Tuple[str, List[Tuple[int, int, str]]]:
    """找出预处理指令行，返回去掉指令的掩码文本和 (起始行, 结束行, 指令原文) 列表"""
    masked_lines = masked.split("\n")
    original_lines = original.split("\n")
    directives: List[Tuple[int, int, str]] = []
    i = 0
    while i < len(masked_lines):
        if masked_lines[i].lstrip().startswith("#"):
            start = i
            while i < len(masked_lines) - 1 and original_lines[i].rstrip().endswith("\\"):
                i += 1
            directives.append((start + 1, i + 1, "\n".join(original_lines[start : i + 1])))
            for j in range(start, i + 1):
                masked_lines[j] = " " * len(masked_lines[j])
        i += 1
    return "\n".join(masked_lines), directives


def _directive_name(directive: str) -> Optional[str]:
    m = _DIRECTIVE_RE.match(directive)
    if not m:
        return None
    keyword, rest = m.group(1), m.group(2).replace("\\\n", " ").strip()
    if keyword in ("define", "undef"):
        ident = _IDENT_RE.match(rest)
        return ident.group(0) if ident else None
    if keyword in ("include", "include_next", "import"):
        return rest.strip('<>" \t') or None
    if keyword == "pragma":
        return rest.split()[0] if rest.split() else "pragma"
    # 条件编译等结构性指令不视为声明
    return None


def _match_close(masked: str, open_idx: int, open_ch: str = "{", close_ch: str = "}") -> Optional[int]:
    depth = 0
    for i in range(open_idx, len(masked)):
        c = masked[i]
        if c == open_ch:
            depth += 1
        elif c == close_ch:
            depth -= 1
            if depth == 0:
                return i
    return None


def _paren_groups(text: str) -> List[Tuple[int, int]]:
    """顶层括号组的 (起始, 结束) 偏移"""
    groups = []
    i = 0
    while i < len(text):
        if text[i] == "(":
            end = _match_close(text, i, "(", ")")
            if end is None:
                break
            groups.append((i, end))
            i = end + 1
        else:
            i += 1
    return groups


def _trailer_ok(trailer: str) -> bool:
    rest = trailer
    while rest.strip():
        if _CTOR_INIT_RE.fullmatch(rest):
            return True
        for pattern in _TRAILER_PATTERNS:
            m = pattern.match(rest)
            if m and m.end() > 0:
                rest = rest[m.end():]
                break
        else:
            return False
    return True


def _outside_parens(text: str) -> str:
    """去掉所有括号组内部的文本"""
    out = []
    depth = 0
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth = max(0, depth - 1)
        elif depth == 0:
            out.append(c)
    return "".join(out)


_ASSIGN_RE = re.compile(r"(?<![=!<>+\-*/%&|^])=(?!=)")


def _function_name(header: str) -> Optional[str]:
    """若 header（到 '{' 之前的掩码文本）是函数定义头则返回函数名"""
    if "(" not in header:
        return None
    if _ASSIGN_RE.search(_outside_parens(header)) and not re.search(r"\boperator\b", header):
        return None
    for start, end in _paren_groups(header):
        m = _IDENT_BEFORE_PAREN_RE.search(header[:start])
        if not m:
            continue
        name = m.group(1).replace(" ", "")
        if name in _NON_FUNCTION_WORDS or name.split("::")[-1] in _NON_FUNCTION_WORDS:
            continue
        if _trailer_ok(header[end + 1 :]):
            return name
    return None


def _declaration_name(decl: str) -> str:
    """从声明的掩码文本中取出被声明的名字"""
    text = re.sub(r"__attribute__\s*\(\((?:[^()]|\([^()]*\))*\)\)", " ", decl)
    text = _ASSIGN_RE.split(text, maxsplit=1)[0]
    pointer = re.search(r"\(\s*[*&^]\s*([A-Za-z_]\w*)\s*\)", text)
    if pointer:
        return pointer.group(1)
    if "(" in text:
        name = _function_name(text.rstrip().rstrip(";"))
        if name:
            return name
    text = text.split(",")[0]
    text = re.sub(r"\[[^\]]*\]", " ", text)
    idents = _IDENT_RE.findall(text)
    return idents[-1] if idents else "<anonymous>"


def _aggregate_name(header: str, tail: str) -> str:
    """结构体/联合/枚举的名字：标签名，匿名时取 typedef 名或声明的变量名"""
    tail_idents = _IDENT_RE.findall(re.sub(r"\[[^\]]*\]", " ", tail.split(",")[0]))
    if _TYPEDEF_RE.search(header) and tail_idents:
        return tail_idents[-1]
    m = _AGGREGATE_RE.search(header)
    if m and m.group(2):
        return m.group(2)
    if tail_idents:
        return tail_idents[-1]
    idents = _IDENT_RE.findall(header)
    return idents[-1] if idents else "<anonymous>"


def parse_source(source_text: str, file_path: str) -> ParseResult:
    """
    解析源码中的顶层函数与全局声明

    extern "C" 与 namespace 块是透明容器，内部的定义按顶层处理。函数体未闭合时记录
    UnbalancedBraces 警告并停止扫描，已解析的片段照常返回。

    Args:
        source_text: C/C++ 源码（可以无法编译）
        file_path: 仓库内的相对路径

    Returns:
        ParseResult: 按起始行排序的片段和警告列表
    """
    result = ParseResult()
    if not source_text.strip():
        return result

    original = source_text.replace("\r\n", "\n").replace("\r", "\n")
    masked, directives = _collect_directives(original, _mask(original))
    index = _LineIndex(original)

    snippets: List[SourceSnippet] = []
    containers = 0  # 当前所处的透明容器层数
    stmt_start: Optional[int] = None
    i = 0
    n = len(masked)

    def emit(kind: SnippetKind, name: str, start: int, end: int):
        snippets.append(
            SourceSnippet(
                kind=kind,
                name=name,
                body=original[start : end + 1],
                file_path=file_path,
                line_span=(index.line_of(start), index.line_of(end)),
            )
        )

    def finish_declaration(after_brace: int) -> int:
        """在 '}' 之后寻找结束声明的 ';'，返回其偏移（找不到则返回 '}' 的偏移）"""
        j = after_brace + 1
        while j < n and masked[j] not in ";{}":
            j += 1
        return j if j < n and masked[j] == ";" else after_brace

    while i < n:
        c = masked[i]
        if stmt_start is None:
            if c.isspace():
                i += 1
                continue
            stmt_start = i

        if c == ";":
            decl = masked[stmt_start:i]
            if decl.strip():
                emit(SnippetKind.GLOBAL_DECL, _declaration_name(decl), stmt_start, i)
            stmt_start = None
            i += 1
        elif c == "}":
            if containers > 0:
                containers -= 1
            else:
                logger.debug(f"{file_path}: stray '}}' at line {index.line_of(i)}")
            stmt_start = None
            i += 1
        elif c == "{":
            header = masked[stmt_start:i]
            if _EXTERN_C_RE.match(header) or _NAMESPACE_RE.match(header):
                containers += 1
                stmt_start = None
                i += 1
                continue

            close = _match_close(masked, i)
            if close is None:
                warning = UnbalancedBraces(file_path, index.line_of(i))
                result.warnings.append(warning)
                break

            name = None if _TYPEDEF_RE.search(header) else _function_name(header)
            if name is not None:
                emit(SnippetKind.FUNCTION, name, stmt_start, close)
                i = close + 1
            else:
                end = finish_declaration(close)
                if _AGGREGATE_RE.search(header):
                    decl_name = _aggregate_name(header, masked[close + 1 : end])
                else:
                    decl_name = _declaration_name(header)
                emit(SnippetKind.GLOBAL_DECL, decl_name, stmt_start, end)
                i = end + 1
            stmt_start = None
        else:
            i += 1

    for start_line, end_line, text in directives:
        name = _directive_name(text)
        if name is None:
            continue
        if any(s.contains_line(start_line) for s in snippets):
            continue
        snippets.append(
            SourceSnippet(
                kind=SnippetKind.GLOBAL_DECL,
                name=name,
                body=text,
                file_path=file_path,
                line_span=(start_line, end_line),
            )
        )

    snippets.sort(key=lambda s: (s.line_span, s.kind.value, s.name))
    result.snippets = snippets
    return result


def extract_snippets(source_text: str, file_path: str) -> List[SourceSnippet]:
    """返回源码中的全部顶层函数（Function）与全局声明（GlobalDecl）"""
    result = parse_source(source_text, file_path)
    if result.warnings:
        logger.warning(f"{file_path}: {len(result.warnings)} 个解析警告")
    return result.snippets


def extract_normalized(source_text: str, file_path: str) -> List[SourceSnippet]:
    return [normalize(s) for s in extract_snippets(source_text, file_path)]
