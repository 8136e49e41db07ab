"""
pyvulture 语句分析模块

用40条具名正则表达式组成的语句目录，从单行规范化代码中提取变量和操作
（函数调用名、运算符、控制关键字），并为函数体的每一行标注所属的控制结构。

主要内容：
- CATALOG: 语句模式目录（固定40条）
- StatementFacts: 单行语句的变量、操作和控制结构信息
- statement_facts: 分析单行语句
- annotate_body: 逐行标注控制结构的深度与编号

使用示例：
    >>> facts = statement_facts("if (cmaplen < 1) return;")
    >>> sorted(facts.variables), list(facts.operations)
    (['cmaplen'], ['if', '<', 'return'])
"""

import re
import logging
from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Optional, Tuple

from .exceptions import UnclassifiedStatement

logger = logging.getLogger(__name__)

_TYPES = r"void|char|short|int|long|float|double|signed|unsigned|bool|_Bool|size_t|ssize_t|auto|wchar_t"


@dataclass(frozen=True)
class StatementPattern:
    """目录中的一条模式"""

    name: str
    regex: str
    role: str  # skip | variable | op_text | op_keyword | op_callee | op_directive | op_fixed:<label> | unknown


# 顺序即优先级：同一位置上先列出的模式优先匹配
CATALOG: Tuple[StatementPattern, ...] = (
    StatementPattern("string_literal", r'"(?:\\.|[^"\\])*"', "skip"),
    StatementPattern("char_literal", r"'(?:\\.|[^'\\])*'", "skip"),
    StatementPattern("number", r"(?:0[xX][0-9a-fA-F]+|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)[uUlLfF]*", "skip"),
    StatementPattern("preprocessor", r"^\s*#\s*[A-Za-z_]\w*(?:\s*[<\"][^>\"]*[>\"])?", "op_directive"),
    StatementPattern("control_condition", r"\b(?:if|while|for|switch)\b(?:\s*\()?", "op_keyword"),
    StatementPattern("else", r"\belse\b", "op_keyword"),
    StatementPattern("case_label", r"\bcase\b", "op_keyword"),
    StatementPattern("default_label", r"\bdefault\b(?=\s*:)", "op_keyword"),
    StatementPattern("do_loop", r"\bdo\b", "op_keyword"),
    StatementPattern("goto_label", r"\bgoto\s+[A-Za-z_]\w*", "op_keyword"),
    StatementPattern("return", r"\breturn\b", "op_keyword"),
    StatementPattern("loop_jump", r"\b(?:break|continue)\b", "op_keyword"),
    StatementPattern("sizeof", r"\b(?:sizeof|alignof|_Alignof)\b", "op_keyword"),
    StatementPattern("new_delete", r"\b(?:new|delete)\b", "op_keyword"),
    StatementPattern(
        "cast",
        r"\(\s*(?:(?:const|volatile|unsigned|signed|struct|union|enum)\s+)*"
        r"(?:" + _TYPES + r"|[A-Za-z_]\w*_t)(?:\s+(?:int|long|char|short))*\s*\**\s*\)(?=\s*[\w(&*\"'~!-])",
        "op_fixed:cast",
    ),
    StatementPattern("type_keyword", r"\b(?:" + _TYPES + r")\b", "skip"),
    StatementPattern(
        "qualifier",
        r"\b(?:const|volatile|static|extern|register|inline|restrict|__restrict|typedef|unsigned|signed)\b",
        "skip",
    ),
    StatementPattern("aggregate_type", r"\b(?:struct|union|enum|class)\b\s*[A-Za-z_]\w*", "skip"),
    StatementPattern("typedef_name", r"\b[A-Za-z_]\w*_t\b", "skip"),
    StatementPattern("call", r"\b[A-Za-z_]\w*(?=\s*\()", "op_callee"),
    StatementPattern("constant", r"\b(?:NULL|[A-Z][A-Z0-9_]{2,})\b", "skip"),
    StatementPattern("literal_keyword", r"\b(?:nullptr|true|false|this)\b", "skip"),
    StatementPattern("arrow_member", r"->\s*[A-Za-z_~]\w*", "op_fixed:->"),
    StatementPattern("dot_member", r"\.\s*[A-Za-z_~]\w*", "op_fixed:."),
    StatementPattern("shift_assign", r"<<=|>>=", "op_text"),
    StatementPattern("compound_assign", r"[+\-*/%&|^]=", "op_text"),
    StatementPattern("increment_decrement", r"\+\+|--", "op_text"),
    StatementPattern("shift", r"<<|>>", "op_text"),
    StatementPattern("equality", r"==|!=", "op_text"),
    StatementPattern("relational", r"<=|>=|<|>", "op_text"),
    StatementPattern("logical", r"&&|\|\|", "op_text"),
    StatementPattern("logical_not", r"!", "op_text"),
    StatementPattern("assign", r"=", "op_text"),
    StatementPattern("arithmetic", r"[+\-*/%]", "op_text"),
    StatementPattern("bitwise", r"[&|^~]", "op_text"),
    StatementPattern("ternary", r"[?]|:(?!:)", "op_text"),
    StatementPattern("subscript", r"\[", "op_fixed:[]"),
    StatementPattern("identifier", r"[A-Za-z_]\w*", "variable"),
    StatementPattern("punctuation", r"::|[(){}\],;]", "skip"),
    StatementPattern("unknown", r"\S", "unknown"),
)

CATALOG_SIZE = 40
assert len(CATALOG) == CATALOG_SIZE

_GROUP_NAMES = [f"p{i:02d}" for i in range(len(CATALOG))]
_COMBINED_RE = re.compile("|".join(f"(?P<{g}>{p.regex})" for g, p in zip(_GROUP_NAMES, CATALOG)))
_PATTERN_BY_GROUP = dict(zip(_GROUP_NAMES, CATALOG))
_LEADING_WORD_RE = re.compile(r"#?\s*\w+")


@dataclass(frozen=True)
class StatementFacts:
    """单行语句的分析结果"""

    variables: FrozenSet[str] = frozenset()
    operations: Tuple[str, ...] = ()
    control_depth: int = 0
    control_block_id: Optional[str] = None
    unclassified: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if (self.control_depth == 0) != (self.control_block_id is None):
            raise ValueError("control_depth must be 0 exactly when control_block_id is None")

    @property
    def is_empty(self) -> bool:
        return not self.variables and not self.operations


def tokenize(line: str) -> List[Tuple[StatementPattern, str]]:
    """按目录切分一行代码，返回 (模式, 文本) 列表"""
    return [(_PATTERN_BY_GROUP[m.lastgroup], m.group(0)) for m in _COMBINED_RE.finditer(line)]  # type: ignore[index]


def statement_facts(line: str, strict: bool = False) -> StatementFacts:
    """
    提取单行语句的变量和操作

    Args:
        line: 一行规范化代码
        strict: 为True时，出现目录无法识别的记号会抛出 UnclassifiedStatement

    Returns:
        StatementFacts: control_depth 为0，control_block_id 为None
    """
    variables = set()
    operations: List[str] = []
    unknown: List[str] = []

    for pattern, text in tokenize(line):
        role = pattern.role
        if role == "skip":
            continue
        if role == "variable":
            variables.add(text)
        elif role == "op_text" or role == "op_callee":
            operations.append(text)
        elif role == "op_keyword":
            operations.append(_LEADING_WORD_RE.match(text).group(0))  # type: ignore[union-attr]
        elif role == "op_directive":
            operations.append("#" + _LEADING_WORD_RE.match(text.lstrip().lstrip("#")).group(0).strip())  # type: ignore[union-attr]
        elif role.startswith("op_fixed:"):
            operations.append(role.split(":", 1)[1])
        else:
            unknown.append(text)

    if unknown:
        if strict:
            raise UnclassifiedStatement(line)
        logger.debug(f"未识别的记号 {unknown} 出现在: {line!r}")

    return StatementFacts(
        variables=frozenset(variables),
        operations=tuple(operations),
        unclassified=tuple(unknown),
    )


# ---------------------------------------------------------------- 控制结构标注


@dataclass
class _Block:
    block_id: Optional[str]  # 普通花括号作用域为None
    kind: str
    braced: bool = False
    state: str = "header"  # header | await | single | body | case


_STRUCT_RE = re.compile(
    r'"(?:\\.|[^"\\])*"|\'(?:\\.|[^\'\\])*\'|[A-Za-z_]\w*|[{}();:]|\S'
)
_CONDITION_KEYWORDS = {"if", "while", "for", "switch"}


def _innermost(stack: List[_Block]) -> Tuple[Optional[str], int]:
    depth = sum(1 for b in stack if b.block_id is not None)
    for block in reversed(stack):
        if block.block_id is not None:
            return block.block_id, depth
    return None, 0


def annotate_body(normalized_body: str, prefix: str = "") -> List[StatementFacts]:
    """
    为函数体的每一行计算 StatementFacts 并填写控制结构信息

    控制结构头所在的行属于它打开的结构；以 '}' 开头的行属于它关闭的结构；
    单语句体在语句结束时关闭，case 标签持续到下一个标签或 switch 结束。

    Args:
        normalized_body: 规范化后的代码，每行一条语句
        prefix: 结构编号前缀，用于区分差异的两侧

    Returns:
        与输入行一一对应的 StatementFacts 列表
    """
    stack: List[_Block] = []
    header: Optional[_Block] = None  # 正在读取条件括号的结构
    do_tail = False  # 正在读取 do ... while(...) 的条件
    expect_do_while = False
    paren = 0
    annotated: List[StatementFacts] = []

    def push(kind: str, lineno: int, state: str) -> _Block:
        block = _Block(block_id=f"{prefix}{kind}@{lineno}", kind=kind, state=state)
        stack.append(block)
        return block

    def statement_starts():
        if stack and stack[-1].state == "await":
            stack[-1].state = "single"

    def complete_singles():
        while stack and stack[-1].state == "single":
            stack.pop()

    for lineno, line in enumerate(normalized_body.split("\n"), 1):
        owner: Optional[Tuple[Optional[str], int]] = None
        start_owner = _innermost(stack)
        tokens = _STRUCT_RE.findall(line)

        for position, tok in enumerate(tokens):
            if header is not None or do_tail:
                if tok == "(":
                    paren += 1
                    continue
                if paren > 0:
                    if tok == ")":
                        paren -= 1
                        if paren == 0:
                            if header is not None:
                                header.state = "await"
                            header = None
                            do_tail = False
                    continue
                # 条件缺少括号
                if header is not None:
                    header.state = "await"
                header = None
                do_tail = False

            if tok in _CONDITION_KEYWORDS:
                if tok == "while" and expect_do_while:
                    expect_do_while = False
                    do_tail = True
                    paren = 0
                    continue
                statement_starts()
                header = push(tok, lineno, "header")
                paren = 0
                if owner is None:
                    owner = _innermost(stack)
                continue
            expect_do_while = False

            if tok in ("else", "do"):
                statement_starts()
                push(tok, lineno, "await")
                if owner is None:
                    owner = _innermost(stack)
            elif tok == "case" or (tok == "default" and tokens[position + 1 : position + 2] == [":"]):
                while stack and stack[-1].state in ("case", "single", "await"):
                    stack.pop()
                push("case", lineno, "case")
                if owner is None:
                    owner = _innermost(stack)
            elif tok == "{":
                if stack and stack[-1].state == "await":
                    stack[-1].braced = True
                    stack[-1].state = "body"
                else:
                    statement_starts()
                    stack.append(_Block(block_id=None, kind="scope", braced=True, state="body"))
            elif tok == "}":
                while stack and not stack[-1].braced:
                    stack.pop()
                if stack:
                    closing = stack[-1]
                    if owner is None and position == 0:
                        owner = _innermost(stack)
                    stack.pop()
                    if closing.kind == "do":
                        expect_do_while = True
                    complete_singles()
            elif tok == ";":
                complete_singles()
            else:
                statement_starts()

        block_id, depth = owner if owner is not None else start_owner
        facts = statement_facts(line)
        annotated.append(replace(facts, control_depth=depth, control_block_id=block_id))

    return annotated
