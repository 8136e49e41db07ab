"""pyvulture - TPL reuse identification and 1-day vulnerability detection for C/C++ source trees

This library builds a platform-specific third-party-library (TPL) database of
function fingerprints and CVE-to-patch mappings, identifies exact and custom
TPL reuse inside a target source tree, and decides for every reused function
whether a known vulnerability is still unpatched.

Key Features:
- Compiler-free function and global-declaration extraction with normalization
- TLSH fuzzy digests with hash-index redundancy elimination
- Multi-slice search from CVE advisories to patch commits
- Path-score and birth-time false-positive elimination for reuse detection
- Version-based and chunk-based patch-presence analysis
- Command-line interface with deterministic JSON reports

Example:
    >>> from pyvulture import fingerprint_target, load_segment, detect_candidates, resolve_reuses
    >>> segment = load_segment("vulture-db/component.jsonl")
    >>> target = fingerprint_target("firmware/src")
    >>> report = resolve_reuses(detect_candidates(target.functions, segment), target.target_id)
    >>> print(report.render_table())
"""

__version__ = "0.1.0"
__author__ = "pyvulture contributors"
__email__ = "pyvulture@example.com"
__license__ = "MIT"

# 异常
from .exceptions import (
    VultureError,
    CodeModelError,
    UnbalancedBraces,
    UnclassifiedStatement,
    AlgorithmMismatch,
    DatabaseError,
    SchemaVersionMismatch,
    DatabaseIOError,
    RepoUnavailable,
    TagCheckoutFailed,
    MappingError,
    UnparseableCpe,
    EmptyRange,
    NoElements,
    DiffFailed,
    OracleUnavailable,
    ClientError,
    NetworkError,
    RateLimited,
    OfflineModeError,
    DetectionError,
    OrphanHunk,
    UnpairedChunk,
    ConfigurationError,
)
from .types import SnippetKind, ReuseGroup, Verdict, RepoMode, ExecutorType, LogLevel
from .config import Config, get_config

# 代码模型
from .snippets import SourceSnippet, extract_snippets, extract_normalized, normalize, normalize_text
from .fingerprint import FuzzyDigest, digest, distance
from .statements import StatementFacts, statement_facts, annotate_body

# 外部接口
from .repo import GitRepoHandle, FixtureRepo, SubprocessRepo, open_repo, export_manifest, parse_unified_diff
from .advisories import Advisory, AdvisorySource, NvdClient, fetch_advisories
from .oracle import (
    VulnerableElements,
    OracleRequest,
    OracleResponse,
    RuleBasedOracle,
    ChatCompletionOracle,
    FallbackOracle,
    create_oracle,
)

# 数据库
from .versions import compare_versions, sort_versions
from .component import (
    FunctionFingerprint,
    TplVersionRecord,
    ComponentSegment,
    select_tpls,
    build_version_records,
    build_segment,
    eliminate_redundancy,
    persist_segment,
    load_segment,
)
from .vulndb import (
    CpeConstraint,
    CveRecord,
    CommitSlice,
    MappingTrace,
    PatchMapper,
    parse_cpe,
    match_cves_to_tpl,
    slice_commits,
    filter_candidate_slices,
    select_candidate_commits,
    confirm_patch_commit,
    persist_vulnerability_segment,
    load_vulnerability_segment,
)

# 复用识别与漏洞检测
from .reuse import TargetProgram, TargetSnippet, ReuseCandidate, ReuseReport, fingerprint_target, detect_candidates, resolve_reuses
from .chunks import LineDiff, Chunk, DiffSet, build_chunks, match_chunks
from .detect import VersionDiff, VulnFinding, VulnReport, version_diff, classify_reuse, analyze_reuse, generate_report

# 并发、稳定性与性能
from .parallel import ParallelExecutor
from .stability import RetryManager, RetryConfig, RetryStrategy
from .cache import ResponseCache, RecordMode
from .performance import performance_context, monitor_performance

# 流水线
from .scanner import RepoSpec, load_repo_list, build_component_db, map_patches, scan_target

# 定义公共API
__all__ = [
    # 版本信息
    "__version__",
    "__author__",
    "__email__",
    "__license__",
    # 异常
    "VultureError",
    "CodeModelError",
    "UnbalancedBraces",
    "UnclassifiedStatement",
    "AlgorithmMismatch",
    "DatabaseError",
    "SchemaVersionMismatch",
    "DatabaseIOError",
    "RepoUnavailable",
    "TagCheckoutFailed",
    "MappingError",
    "UnparseableCpe",
    "EmptyRange",
    "NoElements",
    "DiffFailed",
    "OracleUnavailable",
    "ClientError",
    "NetworkError",
    "RateLimited",
    "OfflineModeError",
    "DetectionError",
    "OrphanHunk",
    "UnpairedChunk",
    "ConfigurationError",
    # 类型与配置
    "SnippetKind",
    "ReuseGroup",
    "Verdict",
    "RepoMode",
    "ExecutorType",
    "LogLevel",
    "Config",
    "get_config",
    # 代码模型
    "SourceSnippet",
    "extract_snippets",
    "extract_normalized",
    "normalize",
    "normalize_text",
    "FuzzyDigest",
    "digest",
    "distance",
    "StatementFacts",
    "statement_facts",
    "annotate_body",
    # 外部接口
    "GitRepoHandle",
    "FixtureRepo",
    "SubprocessRepo",
    "open_repo",
    "export_manifest",
    "parse_unified_diff",
    "Advisory",
    "AdvisorySource",
    "NvdClient",
    "fetch_advisories",
    "VulnerableElements",
    "OracleRequest",
    "OracleResponse",
    "RuleBasedOracle",
    "ChatCompletionOracle",
    "FallbackOracle",
    "create_oracle",
    # 数据库
    "compare_versions",
    "sort_versions",
    "FunctionFingerprint",
    "TplVersionRecord",
    "ComponentSegment",
    "select_tpls",
    "build_version_records",
    "build_segment",
    "eliminate_redundancy",
    "persist_segment",
    "load_segment",
    "CpeConstraint",
    "CveRecord",
    "CommitSlice",
    "MappingTrace",
    "PatchMapper",
    "parse_cpe",
    "match_cves_to_tpl",
    "slice_commits",
    "filter_candidate_slices",
    "select_candidate_commits",
    "confirm_patch_commit",
    "persist_vulnerability_segment",
    "load_vulnerability_segment",
    # 复用识别与漏洞检测
    "TargetProgram",
    "TargetSnippet",
    "ReuseCandidate",
    "ReuseReport",
    "fingerprint_target",
    "detect_candidates",
    "resolve_reuses",
    "LineDiff",
    "Chunk",
    "DiffSet",
    "build_chunks",
    "match_chunks",
    "VersionDiff",
    "VulnFinding",
    "VulnReport",
    "version_diff",
    "classify_reuse",
    "analyze_reuse",
    "generate_report",
    # 并发、稳定性与性能
    "ParallelExecutor",
    "RetryManager",
    "RetryConfig",
    "RetryStrategy",
    "ResponseCache",
    "RecordMode",
    "performance_context",
    "monitor_performance",
    # 流水线
    "RepoSpec",
    "load_repo_list",
    "build_component_db",
    "map_patches",
    "scan_target",
]
