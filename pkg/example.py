#!/usr/bin/env python3
"""pyvulture库的使用示例：用已构建的数据库扫描一个源码目录"""

import sys
from pathlib import Path

from pyvulture import Config, load_segment, load_vulnerability_segment, scan_target


def main():
    print("===== pyvulture 示例程序 =====")

    if len(sys.argv) != 2:
        print("用法: python example.py <目标源码目录>")
        return

    # 读取数据库
    config = Config()
    db = Path(config.db_path)
    segment = load_segment(db / "component.jsonl")
    vuln_path = db / "vulnerability.jsonl"
    records = load_vulnerability_segment(vuln_path) if vuln_path.exists() else []
    print(f"数据库: {segment.summary()}，{len(records)} 条CVE记录")

    # 扫描目标
    result = scan_target(sys.argv[1], segment, records, config)

    print("\n----- 复用的TPL -----")
    print(result.reuse_report.render_table())

    print("\n----- 1-day漏洞 -----")
    print(result.vuln_report.render_table())

    summary = result.vuln_report.summary()
    print(f"\n共 {len(result.vuln_report.findings)} 个结果，其中 {summary['Vulnerable']} 个未修补")

    print("\n===== 示例程序结束 =====")


if __name__ == '__main__':
    main()
