#!/usr/bin/env python3
"""
pyvulture 基本使用示例

这个示例在内存中构造一个小型 TPL 仓库，演示：
- 构建组件段
- 手工登记一个已映射补丁的 CVE
- 扫描一个复制了漏洞函数的目标目录
"""

import tempfile
from pathlib import Path

from pyvulture import (
    Config,
    CveRecord,
    FixtureRepo,
    build_segment,
    build_version_records,
    eliminate_redundancy,
    scan_target,
)
from pyvulture.vulndb import extract_patch_code

VULNERABLE = """\
int parse_header(const unsigned char *buf, int len, struct header *out)
{
  int i;
  for (i = 0; i < 4; i++)
    out->magic[i] = buf[i];
  out->length = (buf[4] << 8) | buf[5];
  memcpy(out->payload, buf + 6, out->length);
  return 0;
}
"""

PATCHED = """\
int parse_header(const unsigned char *buf, int len, struct header *out)
{
  int i;
  if (len < 6)
    return -1;
  for (i = 0; i < 4; i++)
    out->magic[i] = buf[i];
  out->length = (buf[4] << 8) | buf[5];
  if (out->length > len - 6)
    return -1;
  memcpy(out->payload, buf + 6, out->length);
  return 0;
}
"""

MANIFEST = {
    "name": "minihdr",
    "url": "https://github.com/example/minihdr",
    "commits": [
        {"hash": "1" * 40, "timestamp": "2020-01-01T00:00:00Z", "message": "Release 1.0", "files": {"hdr.c": VULNERABLE}},
        {"hash": "2" * 40, "timestamp": "2020-02-01T00:00:00Z", "message": "Check header length", "files": {"hdr.c": PATCHED}},
    ],
    "tags": [{"name": "v1.0", "commit": "1" * 40}, {"name": "v1.1", "commit": "2" * 40}],
}


def main():
    """主函数"""
    print("=== pyvulture 基本使用示例 ===\n")

    # 1. 构建组件段
    repo = FixtureRepo(MANIFEST)
    segment = eliminate_redundancy(build_segment({"minihdr": build_version_records(repo)}))
    print(f"1. 组件段: {segment.summary()}")

    # 2. 登记补丁提交
    record = CveRecord(
        "CVE-2020-99999",
        tpl_name="minihdr",
        description="Buffer overflow in parse_header in hdr.c",
        vulnerable_versions=["v1.0"],
        patch_commit="2" * 40,
        patch_url=f"{MANIFEST['url']}/commit/{'2' * 40}",
        mapping_reason="mapped",
        patch_code=extract_patch_code(repo, "2" * 40),
    )
    print(f"2. {record.cve_id} -> {record.patch_commit[:12]}")

    # 3. 扫描目标
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "firmware"
        (target / "third_party").mkdir(parents=True)
        (target / "third_party" / "minihdr.c").write_text(VULNERABLE, encoding="utf-8")

        result = scan_target(target, segment, [record], Config())
        print("\n3. 扫描结果:\n")
        print(result.render_table())
        if result.vuln_report.has_vulnerable:
            print("\n❌ 目标仍包含未修补的漏洞函数")
        else:
            print("\n✅ 没有发现 1-day 漏洞")


if __name__ == "__main__":
    main()
