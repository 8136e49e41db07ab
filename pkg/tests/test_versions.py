"""版本比较测试"""

import pytest

from pyvulture.versions import compare_versions, sort_versions, strip_prefix


@pytest.mark.parametrize(
    "tag, expected",
    [("wireshark-1.8.7", "1.8.7"), ("v1.2", "1.2"), ("OpenSSL_1_1_1k", "1_1_1k"), ("1.0", "1.0"), ("latest", "latest")],
)
def test_strip_prefix(tag, expected):
    assert strip_prefix(tag) == expected


def test_numeric_segments_compare_by_value():
    assert sort_versions(["v1.10.0", "v1.2.0", "v1.9.1"]) == ["v1.2.0", "v1.9.1", "v1.10.0"]


def test_prefix_is_ignored_when_comparing():
    assert compare_versions("wireshark-1.8.7", "1.8.7") == 0
    assert compare_versions("wireshark-1.8.7", "wireshark-1.8.8") < 0
    assert compare_versions("2.0", "1.99") > 0


def test_shorter_version_sorts_first():
    assert compare_versions("1.2", "1.2.1") < 0


def test_letter_suffixes():
    assert sort_versions(["OpenSSL_1_1_1k", "OpenSSL_1_1_1b", "OpenSSL_1_1_1"]) == [
        "OpenSSL_1_1_1",
        "OpenSSL_1_1_1b",
        "OpenSSL_1_1_1k",
    ]
