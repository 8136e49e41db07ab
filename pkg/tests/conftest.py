"""pyvulture 测试公共夹具

合成仓库全部以 FixtureRepo 清单表示，测试不访问网络也不依赖 git。
"""

import json
from datetime import datetime, timedelta, timezone

import pytest

from pyvulture.repo import FixtureRepo

R3_PATH = "epan/dissectors/packet-assa_r3.c"
PATCH_COMMIT = "779d28d39039ada8970c910d8350fc2eb05cf00a"
CVE_2013_4080 = (
    "The dissect_r3_upstreamcommand_queryconfig function in epan/dissectors/packet-assa_r3.c in the "
    "ASSA R3 dissector in Wireshark 1.8.x before 1.8.8 does not properly handle a zero-length item, "
    "which allows remote attackers to cause a denial of service (infinite loop, and CPU and memory "
    "consumption) via a crafted packet."
)

R3_VULNERABLE = """\
#include "config.h"
#include <epan/packet.h>

static int hf_r3_configitem = -1;

static void
dissect_r3_upstreamcommand_queryconfig (tvbuff_t *tvb, guint32 start_offset, guint32 length, packet_info *pinfo, proto_tree *tree)
{
  guint32 offset = 0;

  while (offset < tvb_reported_length (tvb))
  {
    guint32 item_length = tvb_get_guint8 (tvb, offset + 0);
    proto_tree_add_item (tree, hf_r3_configitem, tvb, offset + 1, 1, ENC_LITTLE_ENDIAN);
    offset += item_length;
  }
}

static void
dissect_r3_upstreamcommand_dumpnvram (tvbuff_t *tvb, guint32 start_offset, guint32 length, packet_info *pinfo, proto_tree *tree)
{
  /* the whole region is opaque */
  proto_tree_add_item (tree, hf_r3_configitem, tvb, start_offset, length, ENC_NA);
  col_set_str (pinfo->cinfo, COL_INFO, "NVRAM dump");
}
"""

R3_PATCHED = R3_VULNERABLE.replace(
    """    guint32 item_length = tvb_get_guint8 (tvb, offset + 0);
""",
    """    guint32 item_length = tvb_get_guint8 (tvb, offset + 0);
    if (item_length == 0)
    {
      expert_add_info_format (pinfo, tree, PI_MALFORMED, PI_WARN, "Invalid item length");
      return;
    }
""",
)

MAIN_C = """\
#include "config.h"

int
main (int argc, char *argv[])
{
  int status = wireshark_main (argc, argv);
  cleanup_dissection ();
  return status;
}
"""

# 漏洞、补丁与定制后的 read_colormap（同样的逻辑写成单行 if 与花括号）
COLORMAP_VULNERABLE = """\
static void read_colormap(bmp_source_ptr sinfo, int cmaplen)
{
  j_decompress_ptr cinfo = sinfo->cinfo;
  int i;
  sinfo->colormap = alloc_sarray(cinfo, cmaplen);
  for (i = 0; i < cmaplen; i++)
    sinfo->colormap[0][i] = read_byte(sinfo);
}
"""

COLORMAP_PATCHED = """\
static void read_colormap(bmp_source_ptr sinfo, int cmaplen)
{
  j_decompress_ptr cinfo = sinfo->cinfo;
  int i;
  if (cmaplen < 1)
    cmaplen = 1;
  if (cmaplen > 256)
    cmaplen = 256;
  sinfo->colormap = alloc_sarray(cinfo, cmaplen);
  if (sinfo->colormap == NULL)
    ERREXIT(cinfo, JERR_BMP_BADCMAP);
  for (i = 0; i < cmaplen; i++)
    sinfo->colormap[0][i] = read_byte(sinfo);
}
"""

COLORMAP_CUSTOM = """\
static void read_colormap(bmp_source_ptr sinfo, int cmaplen)
{
  j_decompress_ptr cinfo = sinfo->cinfo;
  int i;
  if (cmaplen < 1) cmaplen = 1;
  if (cmaplen > 256) cmaplen = 256;
  sinfo->colormap = alloc_sarray(cinfo, cmaplen);
  if (sinfo->colormap == NULL) {
    ERREXIT(cinfo, JERR_BMP_BADCMAP);
  }
  for (i = 0; i < cmaplen; i++)
    sinfo->colormap[0][i] = read_byte(sinfo);
}
"""

PNG_C = """\
#include "png.h"

png_uint_32 png_get_uint_32(png_const_bytep buf)
{
  png_uint_32 uval = ((png_uint_32)(*buf) << 24) + ((png_uint_32)(*(buf + 1)) << 16) +
      ((png_uint_32)(*(buf + 2)) << 8) + ((png_uint_32)(*(buf + 3)));
  return uval;
}

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
}

void png_set_crc_action(png_structrp png_ptr, int crit_action, int ancil_action)
{
  if (png_ptr == NULL)
    return;
  switch (crit_action)
  {
    case PNG_CRC_NO_CHANGE:
      break;
    case PNG_CRC_WARN_USE:
      png_ptr->flags |= PNG_FLAG_CRC_CRITICAL_USE;
      break;
    default:
      png_ptr->flags &= ~PNG_FLAG_CRC_CRITICAL_MASK;
  }
  png_ptr->ancil_action = ancil_action;
}
"""

MATRIX_CPP = """\
#include "precomp.hpp"

size_t cv_mat_total(const CvMat *mat)
{
    if (mat->dims <= 2)
        return (size_t)mat->rows * mat->cols;
    size_t p = 1;
    for (int i = 0; i < mat->dims; i++)
        p *= mat->size[i];
    return p;
}

void cv_mat_release(CvMat *mat)
{
    if (mat->u && CV_XADD(&mat->u->refcount, -1) == 1)
        cv_mat_deallocate(mat);
    mat->u = NULL;
    mat->datastart = mat->dataend = mat->datalimit = mat->data = 0;
    for (int i = 0; i < mat->dims; i++)
        mat->size[i] = 0;
}
"""


def _stamp(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def build_wireshark_manifest() -> dict:
    """1.8.7 到 1.8.8 之间的 348 个提交，补丁提交是第 47 个"""
    t0 = datetime(2013, 5, 17, 16, 41, 42, tzinfo=timezone.utc)
    t1 = datetime(2013, 6, 7, 15, 49, 7, tzinfo=timezone.utc)
    commits = [
        {
            "hash": f"{0:040x}",
            "timestamp": _stamp(t0),
            "message": "Wireshark 1.8.7",
            "files": {R3_PATH: R3_VULNERABLE, "ui/main.c": MAIN_C},
        }
    ]
    for i in range(1, 349):
        timestamp = t1 if i == 348 else t0 + timedelta(seconds=5000 * i)
        if i == 47:
            commits.append(
                {
                    "hash": PATCH_COMMIT,
                    "timestamp": _stamp(timestamp),
                    "message": "Fix infinite loop in dissect_r3_upstreamcommand_queryconfig (CVE-2013-4080)",
                    "files": {R3_PATH: R3_PATCHED},
                }
            )
        else:
            commits.append(
                {
                    "hash": f"{i:040x}",
                    "timestamp": _stamp(timestamp),
                    "message": f"Update counter {i}",
                    "files": {"ui/counter.c": f"int counter_{i} = {i};\n"},
                }
            )
    return {
        "name": "wireshark",
        "url": "https://github.com/wireshark/wireshark",
        "commits": commits,
        "tags": [
            {"name": "wireshark-1.8.7", "commit": f"{0:040x}"},
            {"name": "wireshark-1.8.8", "commit": f"{348:040x}"},
        ],
    }


def build_libpng_manifest() -> dict:
    return {
        "name": "libpng",
        "commits": [
            {"hash": "a" * 40, "timestamp": "2012-01-01T00:00:00Z", "message": "Import", "files": {"png.c": PNG_C}},
        ],
        "tags": [{"name": "v1.6.0", "commit": "a" * 40}],
    }


def build_opencv_manifest() -> dict:
    """opencv 自身的函数加上一份后来拷贝进来的 libpng"""
    return {
        "name": "opencv",
        "commits": [
            {
                "hash": "b" * 40,
                "timestamp": "2014-03-01T00:00:00Z",
                "message": "Core module",
                "files": {"modules/core/src/matrix.cpp": MATRIX_CPP},
            },
            {
                "hash": "c" * 40,
                "timestamp": "2015-06-01T00:00:00Z",
                "message": "Bundle libpng",
                "files": {"3rdparty/libpng/png.c": PNG_C},
            },
        ],
        "tags": [{"name": "4.0.0", "commit": "c" * 40}],
    }


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """隔离用户目录下的配置文件与环境变量覆盖"""
    home = tmp_path / "home"
    monkeypatch.setenv("HOME", str(home))
    for name in ("VULTURE_DB", "VULTURE_OFFLINE", "ORACLE_ENDPOINT", "ORACLE_MODEL", "ORACLE_API_KEY"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def wireshark_repo() -> FixtureRepo:
    return FixtureRepo(build_wireshark_manifest(), location="wireshark.json")


@pytest.fixture
def libpng_repo() -> FixtureRepo:
    return FixtureRepo(build_libpng_manifest(), location="libpng.json")


@pytest.fixture
def opencv_repo() -> FixtureRepo:
    return FixtureRepo(build_opencv_manifest(), location="opencv.json")


@pytest.fixture
def cve_2013_4080_advisory() -> dict:
    return {
        "id": "CVE-2013-4080",
        "description": CVE_2013_4080,
        "cpes": ["cpe:2.3:a:wireshark:wireshark:1.8.7:*:*:*:*:*:*:*"],
    }


@pytest.fixture
def advisories_dir(tmp_path, cve_2013_4080_advisory):
    directory = tmp_path / "advisories"
    directory.mkdir()
    (directory / "CVE-2013-4080.json").write_text(json.dumps(cve_2013_4080_advisory), encoding="utf-8")
    return directory


@pytest.fixture
def repo_list(tmp_path):
    """fixture 模式的仓库列表，清单与列表文件放在同一目录"""
    (tmp_path / "wireshark.json").write_text(json.dumps(build_wireshark_manifest()), encoding="utf-8")
    path = tmp_path / "repos.json"
    path.write_text(json.dumps([{"name": "wireshark", "location": "wireshark.json", "mode": "fixture"}]), encoding="utf-8")
    return path


@pytest.fixture
def colormap_bodies() -> dict:
    return {"vulnerable": COLORMAP_VULNERABLE, "patched": COLORMAP_PATCHED, "custom": COLORMAP_CUSTOM}


@pytest.fixture
def r3_sources() -> dict:
    return {"path": R3_PATH, "vulnerable": R3_VULNERABLE, "patched": R3_PATCHED, "description": CVE_2013_4080}


@pytest.fixture
def png_source() -> str:
    return PNG_C


@pytest.fixture
def patch_commit() -> str:
    return PATCH_COMMIT
