"""工具函数测试"""

from datetime import datetime, timezone

import pytest

from pyvulture.utils import (
    DisjointSet,
    basename,
    format_bytes,
    format_timestamp,
    is_source_file,
    iter_source_files,
    parse_timestamp,
)


class TestDisjointSet:
    def test_groups_are_sorted(self):
        ds = DisjointSet(6)
        ds.merge(4, 1)
        ds.merge(5, 3)
        ds.merge(3, 1)
        assert ds.groups() == [[0], [1, 3, 4, 5], [2]]
        assert len(ds) == 6

    def test_merge_is_idempotent(self):
        ds = DisjointSet(2)
        ds.merge(0, 1)
        ds.merge(1, 0)
        assert ds.find(0) == ds.find(1)

    def test_negative_size(self):
        with pytest.raises(ValueError):
            DisjointSet(-1)


class TestTimestamps:
    def test_parse_rfc3339(self):
        assert parse_timestamp("2013-05-17T16:41:42Z") == datetime(2013, 5, 17, 16, 41, 42, tzinfo=timezone.utc)

    def test_parse_offset_and_epoch(self):
        assert parse_timestamp("2013-05-17T18:41:42+02:00") == parse_timestamp(1368808902)

    def test_microseconds_are_dropped(self):
        assert format_timestamp(parse_timestamp("2013-05-17T16:41:42.999Z")) == "2013-05-17T16:41:42Z"

    def test_invalid(self):
        with pytest.raises(ValueError):
            parse_timestamp("yesterday")


def test_iter_source_files(tmp_path):
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "b.c").write_text("int b;")
    (tmp_path / "src" / "a.hpp").write_text("int a;")
    (tmp_path / "README.md").write_text("docs")
    (tmp_path / ".git").mkdir()
    (tmp_path / ".git" / "hook.c").write_text("int h;")
    assert [rel for rel, _ in iter_source_files(tmp_path)] == ["src/a.hpp", "src/b.c"]


def test_helpers():
    assert is_source_file("x/Y.CC")
    assert not is_source_file("x/y.py")
    assert basename("epan\\dissectors/packet-assa_r3.c") == "packet-assa_r3.c"


@pytest.mark.parametrize(
    "value, expected",
    [(0, "0.0 B"), (512, "512.0 B"), (1536, "1.5 KB"), (3 * 1024**3, "3.0 GB"), (-2048, "-2.0 KB"), (2 * 1024**5, "2.0 PB")],
)
def test_format_bytes(value, expected):
    assert format_bytes(value) == expected
