#!/usr/bin/env python3
"""
CVE 补丁映射示例

用法：
    python patch_mapping.py /src/wireshark advisories/

对本地仓库匹配公告目录中的 CVE，打印每个 CVE 的搜索追踪与汇总。
"""

import logging
import sys

from pyvulture import AdvisorySource, PatchMapper, VultureError, fetch_advisories, match_cves_to_tpl, open_repo


def main(argv):
    if len(argv) != 3:
        print(__doc__)
        return 1

    logging.basicConfig(level=logging.INFO, format="%(levelname)s - %(message)s")
    repo_path, advisories_dir = argv[1], argv[2]

    try:
        repo = open_repo(repo_path)
        tags = repo.list_tags()
        advisories = fetch_advisories(AdvisorySource.directory(advisories_dir))
    except VultureError as e:
        print(f"❌ [{e.error_code}] {e.message}")
        return 1

    records = match_cves_to_tpl(advisories, repo.name, [tag for tag, _ in tags])
    print(f"{repo.name}: {len(tags)} 个标签，{len(records)} 个相关 CVE\n")

    mapper = PatchMapper(k=20)
    mapped = 0
    for record in records:
        trace = mapper.map_cve(record, repo, tags)
        print(trace.render())
        mapped += record.is_mapped

    print(f"\n{len(records)} cves, {mapped} mapped, {len(records) - mapped} unmapped")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
