"""K_α 核族.

K_α(p) = |z|^{α/2} / ‖p‖^{α+1}，α > 0；在水平线上的弦处为零.
"""

import numpy as np

from src.errors import ValidationError
from src.heisenberg import norm_array

from .base import Kernel


class AlphaKernel(Kernel):
    """竖直方向加权 Riesz 型核 K_α."""

    def __init__(self, alpha: float):
        """初始化 K_α.

        Args:
            alpha: 正指数 α.

        Raises:
            ValidationError: α 非正.
        """
        if not alpha > 0:
            raise ValidationError(f"alpha 必须为正: {alpha}")
        self.alpha = float(alpha)

    @property
    def spec(self) -> str:
        return f"alpha:{self.alpha:g}"

    def evaluate_array(self, x, y, z):
        norm = norm_array(x, y, z)
        return np.abs(z) ** (0.5 * self.alpha) / norm ** (self.alpha + 1.0)
