"""模糊摘要测试"""

import pytest

from pyvulture import fingerprint
from pyvulture.exceptions import AlgorithmMismatch
from pyvulture.fingerprint import EXACT, INFINITE_DISTANCE, TLSH, FuzzyDigest, comparable, digest, distance
from pyvulture.snippets import normalize_text

LONG_BODY = """\
int png_sig_cmp(png_const_bytep sig, size_t start, size_t num_to_check)
{
png_byte png_signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
if (num_to_check > 8)
num_to_check = 8;
else if (num_to_check < 1)
return -1;
if (start > 7)
return -1;
return memcmp(&sig[start], &png_signature[start], num_to_check - start);
}"""


def test_short_input_falls_back_to_exact_hash():
    d = digest("int f(){return 0;}")
    assert d.algorithm == EXACT
    assert not d.is_fuzzy
    assert str(d).startswith("sha256:")
    assert FuzzyDigest.parse(str(d)) == d


def test_long_input_uses_tlsh():
    d = digest(LONG_BODY)
    assert d.algorithm == TLSH
    assert len(d.hex) == 70
    assert FuzzyDigest.parse(str(d)) == d


def test_whitespace_does_not_change_digest():
    assert digest(LONG_BODY) == digest(LONG_BODY.replace("\n", "  \n\t"))


def test_identical_inputs_have_zero_distance():
    assert distance(digest(LONG_BODY), digest(LONG_BODY)) == 0


def test_exact_hash_distance_is_zero_or_infinite():
    a, b = digest("x = 1;"), digest("x = 2;")
    assert distance(a, a) == 0
    assert distance(a, b) == INFINITE_DISTANCE


def test_mismatched_algorithms_are_not_comparable():
    fuzzy, exact = digest(LONG_BODY), digest("x = 1;")
    assert not comparable(fuzzy, exact)
    with pytest.raises(AlgorithmMismatch):
        distance(fuzzy, exact)


def test_parse_accepts_versioned_tlsh_prefix():
    hex_value = "A" * 70
    assert FuzzyDigest.parse("T1" + hex_value) == FuzzyDigest(TLSH, hex_value)


def test_tnull_falls_back_to_exact_hash(mocker):
    mocker.patch.object(fingerprint.tlsh, "hash", return_value="TNULL")
    mocker.patch.object(fingerprint.tlsh, "forcehash", return_value="TNULL", create=True)
    d = digest(LONG_BODY)
    assert d.algorithm == EXACT


HEADER_PARSER = """\
static int parse_header(const char *buf, size_t len, struct header *out)
{
  if (len < 8)
    return -1;
  if (memcmp(buf, "HDR1", 4) != 0)
    return -2;
  out->version = buf[4];
  out->flags = buf[5] == 'x' ? 1 : 0;
  out->length = (buf[6] << 8) | buf[7];
  log_debug("parsed header v%d", out->version);
  return 0;
}
"""

COSMETIC_VARIANTS = [
    HEADER_PARSER.replace("  ", "\t"),
    HEADER_PARSER.replace("  ", "    "),
    HEADER_PARSER.replace(";\n", ";   \n"),
    HEADER_PARSER.replace(";\n", ";\n\n"),
    HEADER_PARSER.replace("\n", "\r\n"),
    HEADER_PARSER.replace(")\n{", ") {"),
    HEADER_PARSER.replace(" << ", "<<"),
    HEADER_PARSER.replace("return -1;", "return -1; // short buffer"),
    "/* Parse the fixed-size header. */\n" + HEADER_PARSER,
    "/**\n * parse_header - decode a header\n * @buf: input\n */\n" + HEADER_PARSER,
    HEADER_PARSER.replace("out->flags =", "out->flags /* bit 0 */ ="),
    HEADER_PARSER.replace("  out->version", "  // fields\n  out->version"),
    HEADER_PARSER.replace("  return 0;", "  /*\n   * done\n   */\n  return 0;"),
    HEADER_PARSER.replace('"HDR1"', '"HDR2"'),
    HEADER_PARSER.replace('"parsed header v%d"', '"header parsed v%d"'),
    HEADER_PARSER.replace("'x'", "'y'"),
    HEADER_PARSER.replace('"HDR1"', '"/*1*"'),
    HEADER_PARSER.replace("  ", "\t").replace("return -2;", "return -2; /* bad magic */"),
    HEADER_PARSER.replace('"HDR1"', '"MAGC"').replace(";\n", ";\n\n"),
    HEADER_PARSER.replace("return -2;", "return -2; // don't care"),
]


@pytest.mark.parametrize("variant", COSMETIC_VARIANTS)
def test_cosmetic_changes_have_zero_distance(variant):
    base = digest(normalize_text(HEADER_PARSER))
    changed = digest(normalize_text(variant))
    assert base.algorithm == changed.algorithm == TLSH
    assert distance(base, changed) == 0


def _long_function(local: str) -> str:
    """两百行左右的函数，局部变量 local 出现在少数几行"""
    ops = ["+", "-", "^", "|", "&"]
    lines = [
        "static int mix_state(struct state *st, const unsigned char *in, size_t n)",
        "{",
        f"  int {local} = 0;",
        "  size_t i;",
    ]
    for i in range(196):
        a, b = f"st->r[{i % 13}]", f"st->r[{(i * 7 + 3) % 13}]"
        if i % 50 == 25:
            lines.append(f"  {local} += {a} >> {i % 5 + 1};")
        elif i % 9 == 0:
            lines.append(f"  if ({a} > {i * 31 % 977}) {b} = in[{i % 16}] {ops[i % 5]} {i};")
        else:
            lines.append(f"  {a} = {b} {ops[i % 5]} (in[{(i * 5) % 16}] << {i % 8});")
    lines += [f"  return {local} + st->r[0];", "}"]
    return "\n".join(lines) + "\n"


RENAMES = [
    ("acc", "sum"),
    ("acc", "total"),
    ("result", "res"),
    ("result", "value"),
    ("tmp", "scratch"),
    ("tmp", "t"),
    ("count", "cnt"),
    ("count", "hits"),
    ("mask", "bits"),
    ("mask", "flags_mask"),
    ("h", "hash"),
    ("h", "digest_value"),
    ("state_sum", "ss"),
    ("carry", "overflow"),
    ("carry", "c"),
    ("pos", "offset"),
    ("pos", "cursor"),
    ("x", "y"),
    ("checksum", "crc"),
    ("checksum", "running_checksum"),
]


@pytest.mark.parametrize("old, new", RENAMES)
def test_renamed_local_stays_within_threshold(old, new):
    a = digest(normalize_text(_long_function(old)))
    b = digest(normalize_text(_long_function(new)))
    assert a.algorithm == b.algorithm == TLSH
    assert distance(a, b) <= 30
