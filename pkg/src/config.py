"""配置管理模块.

提供统一的实验配置加载和管理功能，支持从 YAML 文件和环境变量（HSIO_ 前缀）读取配置.
优先级：YAML < 环境变量 < 命令行参数.
"""

import hashlib
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Set, Tuple

import yaml

ENV_PREFIX = "HSIO_"

# 环境变量名（去掉前缀）-> (配置段, 字段)
ENV_FIELDS = {
    "SEED": ("run", "seed"),
    "WORKERS": ("run", "workers"),
    "OUT_DIR": ("run", "out_dir"),
    "DEBUG": ("run", "debug"),
    "KERNEL": ("kernel", "spec"),
    "THETA_C": ("schedule", "theta_c"),
    "THETA_EXP": ("schedule", "theta_exp"),
    "THETAS": ("schedule", "thetas"),
    "STAGES": ("koch", "stages"),
    "VERTEX_BUDGET": ("koch", "vertex_budget"),
    "DEPTH": ("measure", "cantor_depth"),
    "EPSILON": ("sio", "epsilon"),
    "ALPHA": ("curvature", "alpha"),
    "BUDGET": ("curvature", "budget"),
}


@dataclass
class RunConfig:
    """运行配置."""

    seed: int = 0
    workers: int = 0  # 0 表示使用可用 CPU 数
    out_dir: str = "results"
    debug: bool = False


@dataclass
class KernelConfig:
    """核与 CZ 审计配置."""

    spec: str = "alpha:4"  # alpha:<α> / b
    kappa: float = 0.1
    beta: float = 1.0
    c_k: float = 1.0
    samples: int = 100000


@dataclass
class ScheduleConfig:
    """角度序列配置，thetas 非空时使用显式序列."""

    theta_c: float = 0.2
    theta_exp: float = 2.0
    thetas: List[str] = field(default_factory=list)  # 如 ["pi/3", "pi/6"]


@dataclass
class KochConfig:
    """Koch 折线配置."""

    stages: int = 3
    vertex_budget: int = 6**8 + 1
    j0: List[List[float]] = field(default_factory=lambda: [[0.0, 0.0], [1.0, 0.0]])
    lipschitz_head: int = 50


@dataclass
class MeasureConfig:
    """离散测度与正则性审计配置."""

    subdivisions: int = 1
    cantor_depth: int = 8
    cantor_budget: int = 2**13
    center_sample: int = 64
    radii: List[float] = field(default_factory=lambda: [0.1, 0.2, 0.4])
    radius_floor: float = 0.1


@dataclass
class SIOConfig:
    """奇异积分实验配置."""

    epsilon: float = 0.0
    tolerance: float = 1e-10
    max_iterations: int = 1000
    quadrature_points: int = 32
    samples: int = 100
    s: float = 1.0
    n_first: int = 3
    n_last: int = 20
    depth_first: int = 6
    alpha: float = 0.5


@dataclass
class CurvatureConfig:
    """曲率能量配置."""

    alpha: float = 0.5
    budget: int = 5_000_000
    radii: List[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    center_index: int = -1  # -1 表示取中间原子


@dataclass
class ReportConfig:
    """输出配置."""

    delimiter: str = ","
    float_format: str = "{:.17g}"


@dataclass
class Config:
    """主配置类."""

    run: RunConfig = field(default_factory=RunConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    koch: KochConfig = field(default_factory=KochConfig)
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    sio: SIOConfig = field(default_factory=SIOConfig)
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def __post_init__(self):
        # 由环境变量显式设置的 (段, 字段)，不参与 to_dict 与哈希
        self.explicit_keys: Set[Tuple[str, str]] = set()

    @classmethod
    def from_yaml(cls, config_path: str) -> "Config":
        """从 YAML 文件加载配置.

        Args:
            config_path: YAML 配置文件路径.

        Returns:
            Config 实例.

        Raises:
            FileNotFoundError: 配置文件不存在.
            yaml.YAMLError: YAML 解析错误.
        """
        if not os.path.exists(config_path):
            raise FileNotFoundError(f"配置文件不存在: {config_path}")

        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}

        return cls._from_dict(data)

    @classmethod
    def from_env(cls) -> "Config":
        """从环境变量加载配置.

        被设置的字段记入 explicit_keys，合并时即使与默认值相同也覆盖基础配置.

        Returns:
            Config 实例.
        """
        config = cls()
        for name, (section, key) in ENV_FIELDS.items():
            value = os.getenv(f"{ENV_PREFIX}{name}")
            if not value:
                continue
            target = getattr(config, section)
            if key == "thetas":
                parsed: Any = [t.strip() for t in value.split(",") if t.strip()]
            else:
                parsed = _coerce(getattr(target, key), value)
            setattr(target, key, parsed)
            config.explicit_keys.add((section, key))
        return config

    @classmethod
    def _from_dict(cls, data: Dict[str, Any]) -> "Config":
        """从字典创建配置，未知键被忽略.

        Args:
            data: 配置字典.

        Returns:
            Config 实例.
        """
        config = cls()
        for section in fields(cls):
            section_data = data.get(section.name) or {}
            target = getattr(config, section.name)
            for item in fields(target):
                if item.name in section_data:
                    setattr(target, item.name, _coerce(getattr(target, item.name), section_data[item.name]))
        return config

    def to_dict(self) -> Dict[str, Any]:
        """规范化的嵌套字典."""
        return asdict(self)

    def config_hash(self) -> str:
        """配置的 SHA-256（基于键排序后的 YAML 文本）."""
        text = yaml.safe_dump(self.to_dict(), sort_keys=True, allow_unicode=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _coerce(default: Any, value: Any) -> Any:
    """按默认值的类型转换 YAML 中的值."""
    if value is None:
        return default
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.lower() == "true"
        return bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, list):
        return list(value)
    return str(value)


def merge_configs(base: Config, override: Config, defaults: Optional[Config] = None) -> Config:
    """合并配置：override 中显式设置或与默认值不同的字段覆盖 base.

    Args:
        base: 基础配置.
        override: 覆盖配置.
        defaults: 判断"未设置"时使用的默认配置.

    Returns:
        合并后的配置（修改并返回 base）.
    """
    defaults = defaults or Config()
    for section in fields(Config):
        target = getattr(base, section.name)
        source = getattr(override, section.name)
        reference = getattr(defaults, section.name)
        for item in fields(source):
            value = getattr(source, item.name)
            explicit = (section.name, item.name) in override.explicit_keys
            if explicit or value != getattr(reference, item.name):
                setattr(target, item.name, value)
    return base
