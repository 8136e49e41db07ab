"""语句分析测试"""

import pytest

from pyvulture.exceptions import UnclassifiedStatement
from pyvulture.statements import CATALOG, annotate_body, statement_facts, tokenize


def test_catalog_has_forty_patterns():
    assert len(CATALOG) == 40
    assert len({p.name for p in CATALOG}) == 40


@pytest.mark.parametrize(
    "line, variables, operations",
    [
        ("if (cmaplen < 1) return;", {"cmaplen"}, ("if", "<", "return")),
        ("cmaplen = 256;", {"cmaplen"}, ("=",)),
        ("if (sinfo->colormap == NULL)", {"sinfo"}, ("if", "->", "==")),
        ("ERREXIT(cinfo, JERR_BMP_BADCMAP);", {"cinfo"}, ("ERREXIT",)),
        ("len += strlen(buf);", {"len", "buf"}, ("+=", "strlen")),
        ('printf("%d", count);', {"count"}, ("printf",)),
        ("p = (char *) malloc(size * 2);", {"p", "size"}, ("=", "cast", "malloc", "*")),
    ],
)
def test_statement_facts(line, variables, operations):
    facts = statement_facts(line)
    assert set(facts.variables) == variables
    assert facts.operations == operations
    assert facts.control_depth == 0
    assert facts.control_block_id is None


def test_constants_and_literals_are_not_variables():
    facts = statement_facts("return MAX_ITEMS + 0x10 + sizeof(item);")
    assert facts.variables == frozenset({"item"})
    assert facts.operations == ("return", "+", "+", "sizeof")


def test_tokenize_follows_catalog_order():
    tokens = [(pattern.name, text) for pattern, text in tokenize('len += strlen(buf, "a;b");')]
    assert tokens == [
        ("identifier", "len"),
        ("compound_assign", "+="),
        ("call", "strlen"),
        ("punctuation", "("),
        ("identifier", "buf"),
        ("punctuation", ","),
        ("string_literal", '"a;b"'),
        ("punctuation", ")"),
        ("punctuation", ";"),
    ]


def test_strict_mode_rejects_unknown_tokens():
    with pytest.raises(UnclassifiedStatement):
        statement_facts("a = b @ c;", strict=True)
    assert statement_facts("a = b @ c;").unclassified == ("@",)


def test_annotate_single_statement_if():
    body = "int f(int n)\n{\nif (n < 1)\nn = 1;\nreturn n;\n}"
    facts = annotate_body(body, prefix="+:")
    assert facts[2].control_block_id == "+:if@3"
    assert facts[3].control_block_id == "+:if@3"
    assert facts[3].control_depth == 1
    assert facts[4].control_block_id is None
    assert facts[4].control_depth == 0


def test_annotate_braced_and_nested_blocks():
    body = "void g(int n)\n{\nwhile (n) {\nif (n > 2)\nstep(n);\nn--;\n}\ndone();\n}"
    facts = annotate_body(body)
    assert facts[2].control_block_id == "while@3"
    assert facts[3].control_block_id == "if@4"
    assert facts[3].control_depth == 2
    assert facts[4].control_block_id == "if@4"
    assert facts[5].control_block_id == "while@3"
    assert facts[6].control_block_id == "while@3"
    assert facts[7].control_block_id is None


def test_annotate_single_line_if_closes_at_semicolon():
    body = "if (cmaplen < 1) cmaplen = 1;\nif (cmaplen > 256) cmaplen = 256;"
    facts = annotate_body(body)
    assert [f.control_block_id for f in facts] == ["if@1", "if@2"]
    assert all(f.control_depth == 1 for f in facts)
