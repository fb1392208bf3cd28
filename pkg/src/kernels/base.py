"""核函数抽象基类.

定义 Heisenberg 群上 −1 齐次非负核的统一接口，以及 CZ 参数.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from src.errors import SingularityError, ValidationError
from src.heisenberg import HPoint, group_mul, inverse


@dataclass(frozen=True)
class CZParams:
    """Calderón–Zygmund 参数 (κ, β, C_K)."""

    kappa: float = 0.1
    beta: float = 1.0
    c_k: float = 1.0

    def __post_init__(self):
        """校验参数范围."""
        if not 0 < self.kappa < 1:
            raise ValidationError(f"kappa 必须在 (0, 1) 内: {self.kappa}")
        if not 0 < self.beta <= 1:
            raise ValidationError(f"beta 必须在 (0, 1] 内: {self.beta}")
        if not self.c_k >= 1:
            raise ValidationError(f"c_k 必须 ≥ 1: {self.c_k}")


class Kernel(ABC):
    """核函数抽象基类.

    子类只需实现 evaluate_array；单点求值、成对求值和奇点检查由基类完成.
    """

    @property
    @abstractmethod
    def spec(self) -> str:
        """核的文本描述（如 "alpha:4"、"b"）."""
        pass

    @abstractmethod
    def evaluate_array(
        self, x: np.ndarray, y: np.ndarray, z: np.ndarray
    ) -> np.ndarray:
        """逐元素求值，调用方保证不含单位元.

        Args:
            x: 第一坐标.
            y: 第二坐标.
            z: 第三坐标.

        Returns:
            与输入同形状的核值.
        """
        pass

    def eval(self, p: HPoint) -> float:
        """在点 p 处求值.

        Args:
            p: 非单位元的点.

        Returns:
            非负核值.

        Raises:
            SingularityError: p 为单位元.
        """
        if p.x == 0.0 and p.y == 0.0 and p.z == 0.0:
            raise SingularityError(f"核 {self.spec} 在单位元处奇异")
        value = self.evaluate_array(
            np.asarray(p.x, dtype=float),
            np.asarray(p.y, dtype=float),
            np.asarray(p.z, dtype=float),
        )
        return float(value)

    def pair_eval(self, p: HPoint, q: HPoint) -> float:
        """求 K(p^{-1}·q).

        Raises:
            SingularityError: p = q.
        """
        if p == q:
            raise SingularityError(f"核 {self.spec} 在重合点对上奇异: {p}")
        return self.eval(group_mul(inverse(p), q))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.spec!r})"
