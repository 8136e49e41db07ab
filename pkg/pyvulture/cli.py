#!/usr/bin/env python3
"""
pyvulture 命令行接口模块

支持的命令：
- db build: 构建组件段（TPL函数指纹）
- db map-patches: 匹配公告并把CVE映射到补丁提交
- scan: 识别目标源码树中的TPL复用并检测1-day漏洞

退出码：0 表示没有漏洞，2 表示发现至少一个 Vulnerable 结果，1 表示错误。

使用示例：
    # 构建数据库
    pyvulture db build --repos repos.json --db ./vulture-db

    # 映射补丁并打印追踪信息
    pyvulture db map-patches --repos repos.json --advisories advisories/ --trace

    # 扫描
    pyvulture scan --target firmware/src --json --output report.json
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .component import load_segment
from .config import Config
from .exceptions import OfflineModeError, VultureError
from .types import LogLevel
from .scanner import (
    COMPONENT_FILE,
    VULNERABILITY_FILE,
    build_component_db,
    load_repo_list,
    map_patches,
    read_keyword_file,
    scan_target,
)
from .utils import ensure_directory
from .vulndb import load_vulnerability_segment

logger = logging.getLogger("pyvulture.cli")

EXIT_CLEAN = 0
EXIT_ERROR = 1
EXIT_VULNERABLE = 2


def _common_options() -> argparse.ArgumentParser:
    """所有子命令共用的参数；默认值为None，未指定时使用配置"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--db", help="Database directory")
    common.add_argument("--th-hash", type=int, help="TLSH distance threshold (default 30)")
    common.add_argument("--th-sim", type=float, help="Similar-function ratio threshold (default 0.10)")
    common.add_argument("--k", type=int, help="Commit slice size (default 20)")
    common.add_argument("--seed", type=int, help="Seed for tie-breaking (default 0)")
    common.add_argument("--offline", action="store_true", default=None, help="Never touch the network")
    common.add_argument("--jobs", type=int, help="Number of workers (default: logical CPUs)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--log-level", choices=[level.value for level in LogLevel], help="Log level")
    common.add_argument("--log-file", help="Write logs to this file instead of stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    """创建参数解析器"""
    parser = argparse.ArgumentParser(
        prog="pyvulture", description="pyvulture - TPL reuse and 1-day vulnerability scanner for C/C++ sources"
    )
    parser.add_argument("--version", action="store_true", help="Show version")
    common = _common_options()

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # db命令：数据库构建
    db_parser = subparsers.add_parser("db", help="Build the TPL and vulnerability database")
    db_subparsers = db_parser.add_subparsers(dest="db_command", help="Database commands")

    build_parser_ = db_subparsers.add_parser("build", parents=[common], help="Build the component segment")
    build_parser_.add_argument("--repos", required=True, help="JSON list of {name, location, mode, metadata}")
    build_parser_.add_argument("--keywords", help="Platform keyword file, one per line")
    build_parser_.add_argument("--exclude-keywords", help="Exclusion keyword file, one per line")

    map_parser = db_subparsers.add_parser("map-patches", parents=[common], help="Map CVEs to patch commits")
    map_parser.add_argument("--repos", required=True, help="JSON list of {name, location, mode, metadata}")
    map_parser.add_argument("--advisories", help="Directory of advisory JSON files (default: query NVD)")
    map_parser.add_argument("--trace", action="store_true", help="Print the per-CVE search trace")

    # scan命令：扫描目标
    scan_parser = subparsers.add_parser("scan", parents=[common], help="Scan a C/C++ source tree")
    scan_parser.add_argument("--target", required=True, help="Target source directory")
    scan_parser.add_argument("--json", action="store_true", help="Emit JSON instead of tables")
    scan_parser.add_argument("--output", help="Write the report to this file")

    return parser


def load_config(args: argparse.Namespace) -> Config:
    """按 命令行 > 环境变量 > 配置文件 > 默认值 的优先级生成配置"""
    config = Config(getattr(args, "config", None))
    config.apply_overrides(
        {
            "database.db_path": getattr(args, "db", None),
            "detection.th_hash": getattr(args, "th_hash", None),
            "detection.th_sim": getattr(args, "th_sim", None),
            "detection.seed": getattr(args, "seed", None),
            "mapping.k": getattr(args, "k", None),
            "mapping.offline": getattr(args, "offline", None),
            "concurrent.jobs": getattr(args, "jobs", None),
            "logging.level": getattr(args, "log_level", None),
            "logging.file": getattr(args, "log_file", None),
        }
    )
    return config.validate()


def setup_logging(config: Config):
    """配置根日志记录器；没有日志文件时输出到stderr，保持stdout只含报告"""
    logging_config = config.get_logging_config()
    level = getattr(logging, str(logging_config.get("level") or "WARNING").upper(), logging.WARNING)
    fmt = logging_config.get("format") or "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_file = logging_config.get("file")
    if log_file:
        logging.basicConfig(level=level, format=fmt, filename=log_file, filemode="a", force=True)
    else:
        logging.basicConfig(level=level, format=fmt, stream=sys.stderr, force=True)


def _emit(text: str, output: Optional[str] = None):
    if output:
        target = Path(output)
        ensure_directory(target.parent)
        target.write_text(text + "\n", encoding="utf-8")
        logger.info(f"报告已写入 {target}")
    else:
        print(text)


def handle_db_build(args, config: Config) -> int:
    """处理 db build 命令"""
    specs = load_repo_list(args.repos)
    platform = read_keyword_file(args.keywords) if args.keywords else None
    exclusion = read_keyword_file(args.exclude_keywords) if args.exclude_keywords else None
    result = build_component_db(specs, config, platform, exclusion)
    print(result.summary_line())
    return EXIT_CLEAN


def handle_map_patches(args, config: Config) -> int:
    """处理 db map-patches 命令"""
    segment = load_segment(Path(config.db_path) / COMPONENT_FILE)
    specs = load_repo_list(args.repos)
    result = map_patches(specs, segment, config, advisories_dir=args.advisories)
    if args.trace:
        for trace in result.traces:
            print(trace.render())
    print(result.summary_line())
    return EXIT_CLEAN


def handle_scan(args, config: Config) -> int:
    """处理 scan 命令"""
    db = Path(config.db_path)
    segment = load_segment(db / COMPONENT_FILE)
    vuln_path = db / VULNERABILITY_FILE
    if vuln_path.exists():
        records = load_vulnerability_segment(vuln_path)
    else:
        logger.warning(f"{vuln_path} 不存在，只做复用识别")
        records = []

    result = scan_target(args.target, segment, records, config)
    if args.json:
        text = json.dumps(result.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
    else:
        text = result.render_table()
    _emit(text, args.output)
    return EXIT_VULNERABLE if result.vuln_report.has_vulnerable else EXIT_CLEAN


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口函数"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # 处理--version参数
    if args.version:
        from . import __version__

        print(f"pyvulture {__version__}")
        return EXIT_CLEAN

    if not args.command or (args.command == "db" and not args.db_command):
        parser.print_help()
        return EXIT_ERROR

    try:
        config = load_config(args)
        setup_logging(config)
        if args.command == "scan":
            return handle_scan(args, config)
        if args.db_command == "build":
            return handle_db_build(args, config)
        return handle_map_patches(args, config)
    except OfflineModeError as e:
        print(f"error: {e.message} (offline mode has no recorded response; use --advisories DIR or drop --offline)", file=sys.stderr)
    except VultureError as e:
        print(f"error: [{e.error_code}] {e.message}", file=sys.stderr)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
