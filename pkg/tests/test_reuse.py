"""TPL 复用识别测试"""

import random
from datetime import datetime, timezone

import pytest

from pyvulture.component import build_segment, build_version_records, eliminate_redundancy
from pyvulture.parallel import ParallelExecutor
from pyvulture.reuse import ReuseCandidate, detect_candidates, fingerprint_target, jaccard_path_score, resolve_reuses


@pytest.fixture
def segment(libpng_repo, opencv_repo):
    return eliminate_redundancy(
        build_segment({"libpng": build_version_records(libpng_repo), "opencv": build_version_records(opencv_repo)})
    )


@pytest.fixture
def png_target(tmp_path, png_source):
    root = tmp_path / "app"
    (root / "3rdparty" / "libpng").mkdir(parents=True)
    (root / "3rdparty" / "libpng" / "png.c").write_text(png_source, encoding="utf-8")
    (root / "src").mkdir()
    (root / "src" / "app.c").write_text("int app_main(void)\n{\n  return 0;\n}\n", encoding="utf-8")
    return fingerprint_target(root)


def _candidate(tpl, paths, evidence, year):
    return ReuseCandidate(
        tpl_name=tpl,
        version="1.0",
        similar_pairs=len(evidence) or 1,
        matched_paths=frozenset(paths),
        birth=datetime(year, 1, 1, tzinfo=timezone.utc),
        evidence=frozenset(evidence),
    )


def test_fingerprint_target(png_target):
    assert png_target.target_id == "app"
    assert sorted(png_target.sources) == ["3rdparty/libpng/png.c", "src/app.c"]
    names = sorted(f.name for f in png_target.functions)
    assert names == ["app_main", "png_get_uint_32", "png_set_crc_action", "png_sig_cmp"]


def test_copied_library_is_attributed_to_its_origin(png_target, segment):
    candidates = detect_candidates(png_target.functions, segment)
    assert [c.tpl_name for c in candidates] == ["libpng"]
    libpng = candidates[0]
    assert libpng.version == "v1.6.0"
    assert libpng.similar_pairs >= 3
    assert libpng.matched_paths == frozenset({"3rdparty/libpng/png.c"})
    assert libpng.birth == datetime(2012, 1, 1, tzinfo=timezone.utc)


def test_detection_is_independent_of_worker_count(png_target, segment):
    with ParallelExecutor(max_workers=4) as executor:
        parallel = detect_candidates(png_target.functions, segment, executor=executor)
    assert parallel == detect_candidates(png_target.functions, segment)


def test_threshold_on_share_of_functions(png_target, segment):
    assert detect_candidates(png_target.functions, segment, th_sim=1.0) == []


def test_unrelated_target(tmp_path, segment):
    (tmp_path / "x.c").write_text("int unrelated_function_name(int value)\n{\n  return value * 42 + 7;\n}\n")
    assert detect_candidates(fingerprint_target(tmp_path).functions, segment) == []


def test_candidate_requires_a_pair():
    with pytest.raises(ValueError):
        ReuseCandidate("zlib", "1.0", 0, frozenset(), datetime(2000, 1, 1, tzinfo=timezone.utc))


def test_jaccard_path_score():
    assert jaccard_path_score("3rdparty/libpng/png.c", "libpng") == pytest.approx(0.25)
    assert jaccard_path_score("3rdparty/libpng/png.c", "opencv") == 0.0
    assert jaccard_path_score("", "") == 0.0


class TestResolveReuses:
    def test_path_score_drops_wrong_library(self):
        libpng = _candidate("libpng", ["3rdparty/libpng/png.c"], ["e1"], 2012)
        opencv = _candidate("opencv", ["3rdparty/libpng/png.c"], ["e2"], 2014)
        report = resolve_reuses([opencv, libpng], target_id="app")
        assert [c.tpl_name for c in report.confirmed] == ["libpng"]
        assert report.to_dict()["reuses"][0]["paths"] == ["3rdparty/libpng/png.c"]

    def test_shared_evidence_keeps_earliest_birth(self):
        older = _candidate("zlib", ["lib/zlib/inflate.c"], ["e1", "e2"], 1995)
        newer = _candidate("minizip", ["contrib/minizip/unzip.c"], ["e2", "e3"], 2010)
        bystander = _candidate("libpng", ["libpng/png.c"], ["e9"], 2012)
        report = resolve_reuses([newer, bystander, older])
        assert [c.tpl_name for c in report.confirmed] == ["libpng", "zlib"]

    def test_evidence_closure_is_transitive(self):
        a = _candidate("alpha", ["alpha/a.c"], ["e1"], 2005)
        b = _candidate("beta", ["beta/b.c"], ["e1", "e2"], 2001)
        c = _candidate("gamma", ["gamma/c.c"], ["e2"], 2009)
        assert [x.tpl_name for x in resolve_reuses([a, b, c]).confirmed] == ["beta"]

    def test_input_order_does_not_matter(self):
        candidates = [
            _candidate("zlib", ["lib/zlib/inflate.c"], ["e1"], 1995),
            _candidate("minizip", ["contrib/minizip/unzip.c"], ["e1"], 2010),
            _candidate("libpng", ["libpng/png.c", "lib/zlib/inflate.c"], ["e5"], 2012),
            _candidate("opencv", ["libpng/png.c"], ["e6"], 2014),
        ]
        expected = resolve_reuses(candidates).confirmed
        for seed in range(5):
            shuffled = list(candidates)
            random.Random(seed).shuffle(shuffled)
            assert resolve_reuses(shuffled).confirmed == expected

    def test_render_table(self):
        report = resolve_reuses([_candidate("zlib", ["zlib/inflate.c"], ["e1"], 1995)], target_id="app")
        lines = report.render_table().splitlines()
        assert lines[0].split() == ["TPL", "VERSION", "PAIRS", "BIRTH", "PATHS"]
        assert lines[1].split() == ["zlib", "1.0", "1", "1995-01-01T00:00:00Z", "1"]
        assert resolve_reuses([], target_id="app").render_table() == "app: no TPL reuse detected"
