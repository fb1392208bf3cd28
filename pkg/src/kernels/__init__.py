"""核函数模块.

提供 K_α、K_b 两族核的统一接口与 CZ 性质审计.
"""

from src.errors import ValidationError

from .alpha_kernel import AlphaKernel
from .audits import AuditReport, Violation, check_growth, check_hoelder, check_homogeneity
from .b_kernel import BKernel
from .base import CZParams, Kernel

__all__ = [
    "Kernel",
    "CZParams",
    "AlphaKernel",
    "BKernel",
    "AuditReport",
    "Violation",
    "check_homogeneity",
    "check_growth",
    "check_hoelder",
    "parse_kernel_spec",
]


def parse_kernel_spec(text: str) -> Kernel:
    """解析核描述字符串.

    Args:
        text: "alpha:<α>" 或 "b"（大小写不敏感）.

    Returns:
        对应的 Kernel 实例.

    Raises:
        ValidationError: 无法识别的描述.
    """
    value = text.strip().lower()
    if value == "b":
        return BKernel()
    if value.startswith("alpha:"):
        try:
            alpha = float(value.split(":", 1)[1])
        except ValueError as e:
            raise ValidationError(f"无法解析 alpha: {text}") from e
        return AlphaKernel(alpha)
    raise ValidationError(f"未知的核描述: {text}")
