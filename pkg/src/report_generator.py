"""报告生成器模块.

生成逗号分隔的结果表（一行表头）、YAML 键值格式的运行清单以及违例记录文件.
输出中不含时间戳，同一配置与种子的重复运行产生逐字节相同的文件.
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import yaml

from src.config import ReportConfig

logger = logging.getLogger(__name__)


class ReportGenerator:
    """结果表与运行清单生成器."""

    def __init__(self, config: Optional[ReportConfig] = None):
        """初始化报告生成器.

        Args:
            config: 输出配置，使用默认配置如果为 None.
        """
        self.config = config or ReportConfig()

    def format_value(self, value: Any) -> str:
        """格式化单个单元格."""
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            if math.isnan(value):
                return "nan"
            return self.config.float_format.format(float(value))
        if value is None:
            return ""
        return str(value)

    def generate_table(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """生成带一行表头的分隔文本.

        Args:
            header: 列名.
            rows: 数据行.

        Returns:
            以换行结尾的表格文本.
        """
        delimiter = self.config.delimiter
        lines = [delimiter.join(header)]
        for row in rows:
            lines.append(delimiter.join(self.format_value(v) for v in row))
        return "\n".join(lines) + "\n"

    def generate_manifest(
        self,
        command: str,
        parameters: Dict[str, Any],
        seed: int,
        budgets: Dict[str, Any],
        config_hash: str,
        summary: Dict[str, Any],
    ) -> str:
        """生成运行清单文本（YAML，键排序）."""
        manifest = {
            "command": command,
            "parameters": _plain(parameters),
            "seed": int(seed),
            "budgets": _plain(budgets),
            "config_hash": config_hash,
            "summary": _plain(summary),
        }
        return yaml.safe_dump(manifest, sort_keys=True, allow_unicode=True)

    def write_table(self, path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        _write(path, self.generate_table(header, rows))
        logger.info(f"结果表已写入 {path}")
        return path

    def write_manifest(self, out_path: str, **manifest: Any) -> str:
        path = manifest_path(out_path)
        _write(path, self.generate_manifest(**manifest))
        logger.debug(f"运行清单已写入 {path}")
        return path

    def write_lines(self, path: str, lines: List[str]) -> str:
        _write(path, "".join(line + "\n" for line in lines))
        return path


def manifest_path(out_path: str) -> str:
    """结果表旁的清单路径 <stem>.manifest.txt."""
    p = Path(out_path)
    return str(p.with_name(p.stem + ".manifest.txt"))


def violations_path(out_path: str) -> str:
    """结果表旁的违例记录路径 <stem>.violations.txt."""
    p = Path(out_path)
    return str(p.with_name(p.stem + ".violations.txt"))


def _write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _plain(value: Any) -> Any:
    """把 numpy 标量、元组等转换为 YAML 可安全输出的内置类型."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value
