"""
Configuration management for unbiased particle MCMC runs.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .models.data_models import AdaptationConfig
from .models.error_handling import ConfigurationError

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ModelSpec(BaseModel):
    """目标模型及其参数"""

    name: str
    params: Dict[str, Any] = Field(default_factory=dict)
    data: Optional[str] = None

    @field_validator("data")
    @classmethod
    def data_file_exists(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not Path(value).expanduser().exists():
            raise ValueError(f"data file does not exist: {value}")
        return value


class AdaptationSettings(BaseModel):
    """自适应阶段参数"""

    n0: int = Field(10000, ge=2)
    gamma0: float = Field(0.8, gt=0.0, lt=1.0)
    zeta0: float = Field(0.95, ge=0.0, le=1.0)
    rejection_rate: Optional[float] = Field(None, gt=0.0, le=1.0)
    max_steps: int = Field(100, ge=1)
    max_stages: int = Field(10000, ge=1)

    def to_config(self) -> AdaptationConfig:
        return AdaptationConfig(
            n0=self.n0,
            gamma0=self.gamma0,
            zeta0=self.zeta0,
            rejection_rate=self.rejection_rate,
            max_steps=self.max_steps,
            max_stages=self.max_stages,
        )


class OutputPaths(BaseModel):
    """输出文件路径；相对路径位于 out_dir 之下"""

    out_dir: str = "results"
    schedule: str = "schedule.json"
    runs: str = "runs.jsonl"
    report: str = "estimate.json"
    curve: str = "variance_time.csv"
    edges: str = "edge_probabilities.csv"
    diagnostics: str = "diagnostics.json"
    trace: Optional[str] = None

    def resolve(self, name: str) -> str:
        value = getattr(self, name)
        if value is None:
            raise ConfigurationError(f"output path '{name}' is not configured")
        path = Path(value).expanduser()
        if not path.is_absolute():
            path = Path(self.out_dir).expanduser() / path
        return str(path)


class RunConfig(BaseModel):
    """一次完整实验的配置"""

    model: ModelSpec
    N: int = Field(64, ge=2)
    rho: float = Field(0.5, ge=0.0, le=1.0)
    l: int = Field(1, ge=1)
    k: Union[int, Literal["auto"]] = "auto"
    replicates: int = Field(8, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    gamma: float = Field(0.5, ge=0.0, le=1.0)
    time_budget_seconds: Optional[float] = Field(None, gt=0.0)
    max_iterations: Optional[int] = Field(None, ge=1)
    workers: int = Field(1, ge=1)
    log_level: str = "INFO"
    statistic: Optional[str] = None
    confidence: float = Field(0.95, gt=0.0, lt=1.0)
    l_grid: List[int] = Field(default_factory=list)
    k_grid: Optional[List[int]] = None
    smc_particles: int = Field(1000, ge=1)
    chain_steps: int = Field(100000, ge=2)
    chain_burn_in: int = Field(1000, ge=0)
    adaptation: AdaptationSettings = Field(default_factory=AdaptationSettings)
    outputs: OutputPaths = Field(default_factory=OutputPaths)

    @field_validator("k")
    @classmethod
    def k_positive(cls, value: Union[int, str]) -> Union[int, str]:
        if value != "auto" and int(value) < 1:
            raise ValueError("k must be a positive integer or 'auto'")
        return value

    @field_validator("log_level")
    @classmethod
    def known_log_level(cls, value: str) -> str:
        if value.upper() not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        return value.upper()

    @field_validator("l_grid", "k_grid")
    @classmethod
    def positive_grid(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and any(v < 1 for v in value):
            raise ValueError("grid values must be positive")
        return value


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


class ConfigurationManager:
    """配置管理器"""

    def __init__(self):
        """初始化配置管理器"""
        self.config: Optional[RunConfig] = None
        self._config_files = [
            "upmc_config.json",
            "~/.upmc_config.json",
        ]

    def load_config(
        self,
        config_file: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> RunConfig:
        """
        加载配置

        Args:
            config_file: 指定配置文件路径
            overrides: 命令行参数，优先级最高

        Returns:
            RunConfig: 运行配置对象

        Raises:
            ConfigurationError: 配置文件无法解析或参数越界
        """
        config_data: Dict[str, Any] = {}

        # 1. 首先尝试从配置文件加载
        if config_file:
            if not Path(config_file).expanduser().exists():
                raise ConfigurationError(f"configuration file not found: {config_file}")
            config_files = [config_file]
        else:
            config_files = self._config_files

        for file_path in config_files:
            expanded_path = Path(file_path).expanduser()
            if expanded_path.exists():
                config_data.update(self._read_file(expanded_path))
                logger.info(f"Loaded configuration from {expanded_path}")
                break

        # 2. 从环境变量加载，会覆盖配置文件中的值
        load_dotenv()
        self._merge(config_data, self._load_from_env())

        # 3. 命令行参数具有最高优先级
        cli_values = {k: v for k, v in (overrides or {}).items() if v is not None}
        self._merge(config_data, cli_values)

        if "model" not in config_data:
            raise ConfigurationError(
                "model is required. Set it in the configuration file "
                '(e.g. {"model": {"name": "mixture"}}).'
            )

        try:
            self.config = RunConfig.model_validate(config_data)
        except ValidationError as e:
            raise ConfigurationError(
                f"invalid configuration: {_validation_message(e)}",
                data={"errors": [str(item["loc"]) for item in e.errors()]},
            )
        return self.config

    @staticmethod
    def _read_file(path: Path) -> Dict[str, Any]:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                data={"line": e.lineno, "column": e.colno},
            )
        except IOError as e:
            raise ConfigurationError(f"cannot read {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top-level JSON value must be an object")
        return data

    @staticmethod
    def _merge(target: Dict[str, Any], updates: Dict[str, Any]) -> None:
        for key, value in updates.items():
            if key == "outputs" and isinstance(target.get(key), dict):
                target[key] = {**target[key], **value}
            else:
                target[key] = value

    def _load_from_env(self) -> Dict[str, Any]:
        """从环境变量加载配置"""
        env_config: Dict[str, Any] = {}

        # 映射环境变量到配置项
        env_mapping = {
            "UPMC_SEED": "seed",
            "UPMC_WORKERS": "workers",
            "UPMC_LOG_LEVEL": "log_level",
            "UPMC_REPLICATES": "replicates",
            "UPMC_TIME_BUDGET": "time_budget_seconds",
        }

        for env_key, config_key in env_mapping.items():
            value = os.getenv(env_key)
            if value:
                env_config[config_key] = value
                logger.debug(f"Loaded {config_key} from environment variable {env_key}")

        out_dir = os.getenv("UPMC_OUT_DIR")
        if out_dir:
            env_config["outputs"] = {"out_dir": out_dir}

        return env_config

    def validate_config(self) -> bool:
        """
        验证配置的有效性

        Returns:
            bool: 配置是否有效
        """
        if not self.config:
            return False

        out_dir = Path(self.config.outputs.out_dir).expanduser()
        if out_dir.exists() and not out_dir.is_dir():
            logger.error(f"Output directory is not a directory: {out_dir}")
            return False

        if self.config.k != "auto" and self.config.k > self.config.l:
            logger.error(f"k={self.config.k} exceeds l={self.config.l}")
            return False

        if self.config.adaptation.n0 < self.config.N:
            logger.warning(
                f"Adaptation uses N0={self.config.adaptation.n0} < N={self.config.N}"
            )

        return True

    def setup_logging(self, level: Optional[str] = None) -> None:
        """设置日志配置"""
        level = (level or (self.config.log_level if self.config else "INFO")).upper()

        # 配置根日志记录器
        logging.basicConfig(
            level=getattr(logging, level),
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            handlers=[
                logging.StreamHandler(),
            ],
            force=True,
        )

        # 设置特定模块的日志级别
        logging.getLogger("unbiased_pmcmc").setLevel(getattr(logging, level))
        logging.getLogger("joblib").setLevel(logging.WARNING)

        logger.info(f"Logging configured with level: {level}")

    def get_config(self) -> Optional[RunConfig]:
        """获取当前配置"""
        return self.config

    def create_sample_config(self, file_path: str = "upmc_config.json") -> None:
        """
        创建示例配置文件

        Args:
            file_path: 配置文件路径
        """
        sample_config = {
            "model": {"name": "mixture", "params": {"d_y": 100, "data_seed": 0}},
            "N": 64,
            "rho": 0.5,
            "l": 100,
            "k": "auto",
            "replicates": 8,
            "seed": 1,
            "gamma": 0.5,
            "time_budget_seconds": None,
            "workers": 1,
            "log_level": "INFO",
            "l_grid": [10, 50, 100],
            "adaptation": {"n0": 1000, "gamma0": 0.8, "zeta0": 0.95},
            "outputs": {"out_dir": "results"},
        }

        try:
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump(sample_config, f, indent=2, ensure_ascii=False)
            logger.info(f"Sample configuration file created at: {file_path}")
        except IOError as e:
            logger.error(f"Failed to create sample config file: {e}")
            raise


# 全局配置管理器实例
config_manager = ConfigurationManager()
