"""K_b 核.

K_b(p) = |x| / ‖p‖²，在 x = 0 的平面上为零.
"""

import numpy as np

from .base import Kernel


class BKernel(Kernel):
    """核 K_b."""

    @property
    def spec(self) -> str:
        return "b"

    def evaluate_array(self, x, y, z):
        # ‖p‖² = hypot(x²+y², z)
        return np.abs(x) / np.hypot(x * x + y * y, z)
