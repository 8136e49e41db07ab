"""配置管理模块

配置优先级：命令行参数 > 环境变量 > 配置文件 > 默认值。
"""

import os
import json
import copy
import logging
from typing import Dict, Any, Optional
from pathlib import Path

import psutil

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# 环境变量到配置键的映射
ENV_OVERRIDES = {
    "VULTURE_DB": "database.db_path",
    "VULTURE_OFFLINE": "mapping.offline",
    "ORACLE_ENDPOINT": "oracle.endpoint",
    "ORACLE_MODEL": "oracle.model",
    "ORACLE_API_KEY": "oracle.api_key",
}

# 物联网平台的默认关键词
IOT_KEYWORDS = [
    "iot",
    "internet of things",
    "embedded",
    "mqtt",
    "coap",
    "zigbee",
    "lwm2m",
    "ble",
    "bluetooth low energy",
    "sensor",
    "microcontroller",
    "mcu",
    "rtos",
    "esp32",
    "esp8266",
    "arduino",
    "smart home",
    "modbus",
    "6lowpan",
]

EXCLUSION_KEYWORDS = ["system", "server", "firmware"]


def _default_jobs() -> int:
    return psutil.cpu_count(logical=True) or 1


class Config:
    """配置管理类"""

    def __init__(self, config_file: Optional[str] = None, environ: Optional[Dict[str, str]] = None):
        """
        初始化配置管理器

        Args:
            config_file: 配置文件路径，如果为None则尝试 ~/.pyvulture/config.json
            environ: 环境变量字典，默认使用 os.environ
        """
        self.config_file = config_file or self._get_default_config_path()
        self._config = self._load_default_config()
        self._load_config(explicit=config_file is not None)
        self._apply_environment(os.environ if environ is None else environ)

    def _get_default_config_path(self) -> str:
        """获取默认配置文件路径"""
        return str(Path.home() / ".pyvulture" / "config.json")

    def _load_default_config(self) -> Dict[str, Any]:
        """加载默认配置"""
        return {
            "detection": {
                "th_hash": 30,  # TLSH距离阈值
                "th_sim": 0.10,  # 版本相似函数比例阈值
                "seed": 0,  # 平局随机选择的种子
            },
            "mapping": {
                "k": 20,  # 提交切片大小
                "offline": False,
            },
            "selection": {
                "min_stars": 100,
                "platform_keywords": list(IOT_KEYWORDS),
                "exclusion_keywords": list(EXCLUSION_KEYWORDS),
            },
            "database": {
                "db_path": "./vulture-db",
            },
            "oracle": {
                "endpoint": None,  # 兼容chat-completion的接口地址
                "model": None,
                "api_key": None,
                "timeout": 60,
            },
            "concurrent": {
                "jobs": _default_jobs(),  # 默认为逻辑CPU数
                "executor_type": "thread",
            },
            "network": {
                "nvd_endpoint": "https://services.nvd.nist.gov/rest/json/cves/2.0",
                "results_per_page": 2000,
                "timeout": 30,
                "max_attempts": 5,
                "base_delay": 1.0,
                "backoff_factor": 2.0,
                "recordings": None,  # 录制/回放响应目录
                "record_mode": "off",  # off | record | replay
            },
            "logging": {
                "level": "WARNING",
                "file": None,  # 日志文件路径，None表示输出到stderr
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
        }

    def _load_config(self, explicit: bool = False):
        """从配置文件加载配置"""
        if not os.path.exists(self.config_file):
            if explicit:
                raise ConfigurationError(f"Config file not found: {self.config_file}", config_key="config")
            logger.debug("No config file found, using default configuration")
            return
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                user_config = json.load(f)
        except (OSError, ValueError) as e:
            if explicit:
                raise ConfigurationError(f"Failed to load config file {self.config_file}: {e}", config_key="config") from e
            logger.warning(f"Failed to load config file {self.config_file}: {e}")
            return
        if not isinstance(user_config, dict):
            raise ConfigurationError(f"{self.config_file}: top-level value must be an object", config_key="config")
        self._merge_config(self._config, user_config)
        logger.info(f"Loaded config from {self.config_file}")

    def _merge_config(self, default: Dict[str, Any], user: Dict[str, Any]):
        """递归合并配置"""
        for key, value in user.items():
            if key in default and isinstance(default[key], dict) and isinstance(value, dict):
                self._merge_config(default[key], value)
            else:
                default[key] = value

    def _apply_environment(self, environ: Dict[str, str]):
        """应用环境变量覆盖"""
        for name, key in ENV_OVERRIDES.items():
            value = environ.get(name)
            if value is None or value == "":
                continue
            if key == "mapping.offline":
                self.set(key, value.strip().lower() in ("1", "true", "yes", "on"))
            else:
                self.set(key, value)
            logger.debug(f"Config {key} overridden by ${name}")

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置值

        Args:
            key: 配置键，支持点号分隔的嵌套键，如 'detection.th_hash'
            default: 默认值

        Returns:
            配置值
        """
        value: Any = self._config
        try:
            for k in key.split("."):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any):
        """
        设置配置值

        Args:
            key: 配置键，支持点号分隔的嵌套键
            value: 配置值
        """
        keys = key.split(".")
        config = self._config

        # 导航到目标位置
        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def apply_overrides(self, overrides: Dict[str, Any]):
        """应用命令行参数覆盖，值为None的项被忽略"""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def validate(self) -> "Config":
        """校验阈值参数，返回自身以便链式调用"""
        th_hash = self.get("detection.th_hash")
        th_sim = self.get("detection.th_sim")
        k = self.get("mapping.k")
        jobs = self.get("concurrent.jobs")

        if not isinstance(th_hash, (int, float)) or th_hash <= 0:
            raise ConfigurationError(f"th_hash must be > 0, got {th_hash!r}", config_key="detection.th_hash")
        if not isinstance(th_sim, (int, float)) or not 0 < th_sim <= 1:
            raise ConfigurationError(f"th_sim must be in (0, 1], got {th_sim!r}", config_key="detection.th_sim")
        if not isinstance(k, int) or k < 1:
            raise ConfigurationError(f"k must be >= 1, got {k!r}", config_key="mapping.k")
        if not isinstance(jobs, int) or jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {jobs!r}", config_key="concurrent.jobs")
        return self

    def save_config(self, path: Optional[str] = None):
        """保存配置到文件"""
        target = path or self.config_file
        try:
            os.makedirs(os.path.dirname(os.path.abspath(target)), exist_ok=True)
            with open(target, "w", encoding="utf-8") as f:
                json.dump(self._config, f, indent=2, ensure_ascii=False)
            logger.info(f"Config saved to {target}")
        except OSError as e:
            raise ConfigurationError(f"Failed to save config to {target}: {e}") from e

    def as_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._config)

    # 便捷访问
    @property
    def th_hash(self) -> int:
        return self.get("detection.th_hash")

    @property
    def th_sim(self) -> float:
        return self.get("detection.th_sim")

    @property
    def seed(self) -> int:
        return self.get("detection.seed")

    @property
    def k(self) -> int:
        return self.get("mapping.k")

    @property
    def offline(self) -> bool:
        return bool(self.get("mapping.offline"))

    @property
    def min_stars(self) -> int:
        return self.get("selection.min_stars")

    @property
    def db_path(self) -> str:
        return self.get("database.db_path")

    @property
    def jobs(self) -> int:
        return self.get("concurrent.jobs")

    def get_oracle_config(self) -> Dict[str, Any]:
        """获取判定服务配置"""
        return self.get("oracle", {})

    def get_network_config(self) -> Dict[str, Any]:
        """获取网络配置"""
        return self.get("network", {})

    def get_logging_config(self) -> Dict[str, Any]:
        """获取日志配置"""
        return self.get("logging", {})


_config: Optional[Config] = None


def get_config() -> Config:
    """获取全局配置实例（首次调用时加载）"""
    global _config
    if _config is None:
        _config = Config()
    return _config
