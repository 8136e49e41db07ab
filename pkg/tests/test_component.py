"""组件段构建、冗余消除与持久化测试"""

import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from pyvulture.component import (
    FunctionFingerprint,
    TplVersionRecord,
    build_segment,
    build_version_records,
    eliminate_redundancy,
    load_segment,
    persist_segment,
    select_tpls,
)
from pyvulture.exceptions import DatabaseIOError, SchemaVersionMismatch
from pyvulture.fingerprint import FuzzyDigest
from pyvulture.utils import parse_timestamp


@pytest.fixture
def fig1_segment(libpng_repo, opencv_repo):
    return build_segment(
        {
            "libpng": build_version_records(libpng_repo),
            "opencv": build_version_records(opencv_repo),
        }
    )


def pairwise_survivors(segment):
    """两两比较的参考实现：摘要相同的两个指纹中保留出生更早者"""
    distinct = segment.distinct_fingerprints()
    dominated = set()
    comparisons = 0
    for i in range(len(distinct)):
        for j in range(i + 1, len(distinct)):
            comparisons += 1
            a, b = distinct[i], distinct[j]
            if str(a.digest) == str(b.digest):
                dominated.add(j if a.survivor_order() < b.survivor_order() else i)
    survivors = {str(fp.digest): fp for k, fp in enumerate(distinct) if k not in dominated}
    return dict(sorted(survivors.items())), comparisons


@pytest.fixture
def planted_segment():
    """三个TPL共500个函数，其中60个是其他TPL中更早函数的副本"""
    rng = random.Random(0)
    start = datetime(2010, 1, 1, tzinfo=timezone.utc)
    originals = [
        FunctionFingerprint(
            FuzzyDigest.parse(f"sha256:{i:064x}"),
            start + timedelta(days=rng.randrange(1000)),
            f"tpl{i % 3}",
            f"src/f{i}.c",
            f"f{i}",
        )
        for i in range(440)
    ]
    copies = []
    for n, source in enumerate(rng.sample(originals, 60)):
        tpl = f"tpl{(int(source.origin_tpl[-1]) + 1) % 3}"
        birth = source.birth + timedelta(days=30)
        copies.append(FunctionFingerprint(source.digest, birth, tpl, f"third_party/c{n}.c", source.name))
    published = start + timedelta(days=2000)
    return build_segment(
        {
            tpl: [TplVersionRecord(tpl, "v1.0", published, [fp for fp in originals + copies if fp.origin_tpl == tpl])]
            for tpl in ("tpl0", "tpl1", "tpl2")
        }
    )


class TestSelectTpls:
    METADATA = [
        {"name": "zlib", "title": "zlib", "description": "A massively spiffy compression library for Android", "star_count": 5000},
        {"name": "demo-app", "title": "demo", "tags": ["android"], "readme_text": "An example app, not a library", "star_count": 900},
        {"name": "tiny", "description": "android helpers", "star_count": 3},
        {"name": "server", "description": "HTTP server for linux", "star_count": 10000},
        {"description": "android but nameless", "star_count": 10000},
    ]

    def test_filters(self):
        selected = select_tpls(self.METADATA, ["android"], ["example", "demo"], min_stars=100)
        assert selected == ["zlib"]

    def test_keywords_are_case_insensitive(self):
        assert select_tpls(self.METADATA, ["ANDROID"], [], min_stars=0) == ["zlib", "demo-app", "tiny"]

    def test_exclusion_matches_whole_words_only(self):
        meta = [{"name": "lib", "description": "android library for examples_of_things", "star_count": 200}]
        assert select_tpls(meta, ["android"], ["example"], min_stars=100) == ["lib"]


class TestVersionRecords:
    def test_libpng_functions(self, libpng_repo):
        records = build_version_records(libpng_repo)
        assert [r.version_tag for r in records] == ["v1.6.0"]
        record = records[0]
        assert record.function_count == 3
        assert {fp.name for fp in record.fingerprints} == {"png_get_uint_32", "png_sig_cmp", "png_set_crc_action"}
        assert all(fp.birth == parse_timestamp("2012-01-01T00:00:00Z") for fp in record.fingerprints)

    def test_birth_of_copied_file(self, opencv_repo):
        record = build_version_records(opencv_repo)[0]
        births = {fp.name: fp.birth for fp in record.fingerprints}
        assert record.function_count == 5
        assert births["cv_mat_total"] == parse_timestamp("2014-03-01T00:00:00Z")
        assert births["png_sig_cmp"] == parse_timestamp("2015-06-01T00:00:00Z")

    def test_only_fixed_versions_are_tagged(self, wireshark_repo):
        records = build_version_records(wireshark_repo)
        assert [r.version_tag for r in records] == ["wireshark-1.8.7", "wireshark-1.8.8"]
        names = {fp.name for fp in records[0].fingerprints}
        assert {"dissect_r3_upstreamcommand_queryconfig", "dissect_r3_upstreamcommand_dumpnvram", "main"} <= names


class TestElimination:
    def test_copied_functions_are_removed(self, fig1_segment):
        segment = eliminate_redundancy(fig1_segment)
        assert segment.summary() == {"tpls": 2, "versions": 2, "fingerprints": 5, "eliminated": 3}
        opencv = segment.tpls["opencv"][0]
        assert {fp.name for fp in opencv.fingerprints} == {"cv_mat_total", "cv_mat_release"}
        libpng = segment.tpls["libpng"][0]
        assert libpng.function_count == 3

    def test_survivor_is_the_earliest(self, fig1_segment):
        segment = eliminate_redundancy(fig1_segment)
        for fp in segment.hash_index.values():
            if fp.name.startswith("png_"):
                assert fp.origin_tpl == "libpng"

    def test_matches_pairwise_reference(self, fig1_segment):
        fast = eliminate_redundancy(fig1_segment)
        survivors, comparisons = pairwise_survivors(fig1_segment)
        assert fast.hash_index == survivors
        assert fast.stats.eliminated == len(fig1_segment.distinct_fingerprints()) - len(survivors)
        assert fast.stats.comparisons < comparisons

    def test_planted_duplicates_in_linear_comparisons(self, planted_segment):
        n = len(planted_segment.distinct_fingerprints())
        assert n == 500
        segment = eliminate_redundancy(planted_segment)
        survivors, _ = pairwise_survivors(planted_segment)
        assert segment.hash_index == survivors
        assert segment.stats.eliminated == 60
        assert segment.stats.comparisons <= 2 * n
        kept = {fp.origin_path for record in segment.versions() for fp in record.fingerprints}
        assert not any(path.startswith("third_party/") for path in kept)

    def test_is_idempotent(self, fig1_segment):
        once = eliminate_redundancy(fig1_segment)
        twice = eliminate_redundancy(once)
        assert twice == once
        assert twice.stats.eliminated == 0


class TestPersistence:
    def test_persist_and_load(self, fig1_segment, tmp_path):
        segment = eliminate_redundancy(fig1_segment)
        path = tmp_path / "db" / "component.jsonl"
        persist_segment(segment, path)

        header = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert header == {"schema_version": 1, "segment": "component"}

        loaded = load_segment(path)
        assert loaded == segment
        assert loaded.summary()["fingerprints"] == 5

    def test_persisted_bytes_are_stable(self, fig1_segment, tmp_path):
        segment = eliminate_redundancy(fig1_segment)
        persist_segment(segment, tmp_path / "a.jsonl")
        persist_segment(load_segment(tmp_path / "a.jsonl"), tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "component.jsonl"
        path.write_text('{"schema_version":2,"segment":"component"}\n', encoding="utf-8")
        with pytest.raises(SchemaVersionMismatch) as excinfo:
            load_segment(path)
        assert excinfo.value.details["found"] == 2

    def test_wrong_segment(self, tmp_path):
        path = tmp_path / "component.jsonl"
        path.write_text('{"schema_version":1,"segment":"vulnerability"}\n', encoding="utf-8")
        with pytest.raises(DatabaseIOError):
            load_segment(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatabaseIOError):
            load_segment(tmp_path / "missing.jsonl")
