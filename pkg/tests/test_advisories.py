"""公告获取测试"""

import json

import pytest
import requests

from pyvulture.advisories import (
    Advisory,
    AdvisorySource,
    NvdClient,
    fetch_advisories,
    parse_nvd_response,
    read_advisory_directory,
)
from pyvulture.cache import ResponseCache
from pyvulture.exceptions import DatabaseIOError, NetworkError, OfflineModeError
from pyvulture.stability import RetryManager, network_retry_config

ENDPOINT = "https://nvd.example/rest/json/cves/2.0"

NVD_PAGE = {
    "resultsPerPage": 2,
    "startIndex": 0,
    "totalResults": 2,
    "vulnerabilities": [
        {
            "cve": {
                "id": "CVE-2022-37434",
                "published": "2022-08-05T07:15:07.240",
                "descriptions": [
                    {"lang": "es", "value": "desbordamiento"},
                    {"lang": "en", "value": "zlib through 1.2.12 has a heap-based buffer over-read in inflate in inflate.c"},
                ],
                "configurations": [
                    {
                        "nodes": [
                            {
                                "cpeMatch": [
                                    {"vulnerable": True, "criteria": "cpe:2.3:a:zlib:zlib:*:*:*:*:*:*:*:*", "versionEndIncluding": "1.2.12"},
                                    {"vulnerable": False, "criteria": "cpe:2.3:o:debian:debian_linux:10.0:*:*:*:*:*:*:*"},
                                ],
                                "children": [
                                    {"cpeMatch": [{"vulnerable": True, "criteria": "cpe:2.3:a:zlib:zlib:1.2.13:*:*:*:*:*:*:*"}]}
                                ],
                            }
                        ]
                    }
                ],
                "references": [{"url": "https://github.com/madler/zlib/commit/eff308af"}],
            }
        },
        {"cve": {"id": "not-an-id"}},
    ],
}


def _response(mocker, status=200, payload=None):
    response = mocker.Mock()
    response.status_code = status
    response.json.return_value = payload if payload is not None else {}
    return response


def _client(mocker, responses, tmp_path=None, mode="off", offline=False):
    session = mocker.Mock(spec=requests.Session)
    session.get.side_effect = responses
    sleeps = []
    retry = RetryManager(network_retry_config(), sleep=sleeps.append)
    cache = ResponseCache(tmp_path, mode) if tmp_path else None
    client = NvdClient(ENDPOINT, results_per_page=2, retry=retry, cache=cache, offline=offline, session=session)
    return client, session, sleeps


def test_parse_nvd_response():
    advisories = parse_nvd_response(NVD_PAGE)
    assert len(advisories) == 1
    advisory = advisories[0]
    assert advisory.cve_id == "CVE-2022-37434"
    assert advisory.description.startswith("zlib through 1.2.12")
    assert [c["criteria"] for c in advisory.cpes] == [
        "cpe:2.3:a:zlib:zlib:*:*:*:*:*:*:*:*",
        "cpe:2.3:a:zlib:zlib:1.2.13:*:*:*:*:*:*:*",
    ]
    assert advisory.references == ["https://github.com/madler/zlib/commit/eff308af"]


def test_advisory_from_dict_accepts_both_id_keys():
    assert Advisory.from_dict({"cve_id": "CVE-2020-0001"}).cve_id == "CVE-2020-0001"
    with pytest.raises(ValueError):
        Advisory.from_dict({"id": "GHSA-xxxx"})


class TestNvdClient:
    def test_search_paginates(self, mocker):
        first = dict(NVD_PAGE, totalResults=3)
        second = {
            "totalResults": 3,
            "vulnerabilities": [{"cve": {"id": "CVE-2018-25032", "descriptions": [{"lang": "en", "value": "zlib deflate"}]}}],
        }
        client, session, _ = _client(mocker, [_response(mocker, payload=first), _response(mocker, payload=second)])
        advisories = client.search("zlib")
        assert [a.cve_id for a in advisories] == ["CVE-2022-37434", "CVE-2018-25032"]
        starts = [call.kwargs["params"]["startIndex"] for call in session.get.call_args_list]
        assert starts == [0, 2]

    def test_rate_limit_then_success(self, mocker):
        client, session, sleeps = _client(mocker, [_response(mocker, 429), _response(mocker, payload=NVD_PAGE)])
        assert [a.cve_id for a in client.search("zlib")] == ["CVE-2022-37434"]
        assert sleeps == [1.0]
        assert client.retry.get_stats()["_request"] == {"success": 1, "failure": 1, "retries": 1}

    def test_retries_exhausted(self, mocker):
        client, session, sleeps = _client(mocker, [_response(mocker, 503)] * 5)
        with pytest.raises(NetworkError):
            client.search("zlib")
        assert sleeps == [1.0, 2.0, 4.0, 8.0]
        assert session.get.call_count == 5

    def test_connection_error_is_retried(self, mocker):
        client, _, sleeps = _client(mocker, [requests.ConnectionError("reset"), _response(mocker, payload=NVD_PAGE)])
        assert len(client.search("zlib")) == 1
        assert sleeps == [1.0]

    def test_offline_without_recording(self, mocker):
        client, session, _ = _client(mocker, [], offline=True)
        with pytest.raises(OfflineModeError):
            client.search("zlib")
        session.get.assert_not_called()

    def test_record_then_replay(self, mocker, tmp_path):
        recorder, _, _ = _client(mocker, [_response(mocker, payload=NVD_PAGE)], tmp_path, "record")
        recorder.search("zlib")
        assert len(list(tmp_path.glob("*.json"))) == 1

        replayer, session, _ = _client(mocker, [], tmp_path, "replay", offline=True)
        assert [a.cve_id for a in replayer.search("zlib")] == ["CVE-2022-37434"]
        session.get.assert_not_called()

    def test_replays_hand_written_recording(self, mocker, tmp_path):
        params = {"keywordSearch": "zlib", "resultsPerPage": 2, "startIndex": 0}
        key = ResponseCache.request_key("GET", ENDPOINT, params)
        (tmp_path / f"{key}.json").write_text(json.dumps({"request": params, "response": NVD_PAGE}), encoding="utf-8")
        client, _, _ = _client(mocker, [], tmp_path, "replay")
        assert len(client.search("zlib")) == 1


class TestDirectory:
    def test_reads_all_formats_and_skips_malformed(self, tmp_path, cve_2013_4080_advisory):
        (tmp_path / "a.json").write_text(json.dumps(cve_2013_4080_advisory))
        (tmp_path / "b.json").write_text(json.dumps([{"id": "CVE-2020-0002"}, {"cve_id": "CVE-2020-0001"}]))
        (tmp_path / "c.json").write_text(json.dumps(NVD_PAGE))
        (tmp_path / "d.json").write_text("{broken")
        (tmp_path / "e.json").write_text(json.dumps({"id": "nope"}))
        (tmp_path / "notes.txt").write_text("ignored")
        advisories = read_advisory_directory(tmp_path)
        assert sorted(a.cve_id for a in advisories) == ["CVE-2013-4080", "CVE-2020-0001", "CVE-2020-0002", "CVE-2022-37434"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatabaseIOError):
            read_advisory_directory(tmp_path / "missing")

    def test_fetch_dedupes_and_sorts(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps([{"id": "CVE-2020-0002", "description": "first"}, {"id": "CVE-2020-0001"}]))
        (tmp_path / "b.json").write_text(json.dumps({"id": "CVE-2020-0002", "description": "second"}))
        advisories = fetch_advisories(AdvisorySource.directory(tmp_path))
        assert [a.cve_id for a in advisories] == ["CVE-2020-0001", "CVE-2020-0002"]
        assert advisories[1].description == "first"

    def test_unknown_source(self):
        with pytest.raises(ValueError):
            fetch_advisories(AdvisorySource("ftp", "x"))
