"""Heisenberg 群基本运算模块.

提供群乘法、逆元、Koranyi 范数、度量、伸缩以及非水平量 NH,
同时提供点云上的向量化版本（成对弦 p_i^{-1} q_j）.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.errors import ValidationError


@dataclass(frozen=True)
class HPoint:
    """Heisenberg 群中的点 (x, y, z).

    x, y 为水平坐标，z 为竖直坐标（伸缩下按平方缩放）.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        """校验坐标均为有限实数."""
        for name in ("x", "y", "z"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"坐标 {name} 不是有限实数: {value}")

    def as_array(self) -> np.ndarray:
        """转换为长度为 3 的数组."""
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values) -> "HPoint":
        """从长度为 3 的序列创建点.

        Args:
            values: (x, y, z) 序列.

        Returns:
            HPoint 实例.
        """
        x, y, z = values
        return cls(float(x), float(y), float(z))

    def __mul__(self, other: "HPoint") -> "HPoint":
        return group_mul(self, other)


IDENTITY = HPoint(0.0, 0.0, 0.0)


def group_mul(p: HPoint, q: HPoint) -> HPoint:
    """群乘法 p·q = (x+x', y+y', z+z'+½(xy'−yx')).

    Args:
        p: 左因子.
        q: 右因子.

    Returns:
        乘积.
    """
    return HPoint(
        p.x + q.x,
        p.y + q.y,
        p.z + q.z + 0.5 * (p.x * q.y - p.y * q.x),
    )


def inverse(p: HPoint) -> HPoint:
    """逆元 (−x, −y, −z)."""
    return HPoint(-p.x, -p.y, -p.z)


def koranyi_norm(p: HPoint) -> float:
    """Koranyi 范数 ((x²+y²)² + z²)^{1/4}.

    Args:
        p: 群中的点.

    Returns:
        非负范数值.
    """
    # hypot 避免 (x²+y²)² 溢出
    return math.sqrt(math.hypot(p.x * p.x + p.y * p.y, p.z))


def dist(p: HPoint, q: HPoint) -> float:
    """左不变度量 d(p, q) = ‖q^{-1}·p‖.

    Args:
        p: 第一个点.
        q: 第二个点.

    Returns:
        两点距离.
    """
    return koranyi_norm(group_mul(inverse(q), p))


def dilate(r: float, p: HPoint) -> HPoint:
    """伸缩 δ_r(x, y, z) = (rx, ry, r²z).

    Args:
        r: 正的伸缩因子.
        p: 群中的点.

    Returns:
        伸缩后的点.

    Raises:
        ValidationError: r 非正.
    """
    if not r > 0:
        raise ValidationError(f"伸缩因子必须为正: {r}")
    return HPoint(r * p.x, r * p.y, r * r * p.z)


def nh(p: HPoint) -> float:
    """非水平量 NH(p) = |z|^{1/2}."""
    return math.sqrt(abs(p.z))


# 向量化版本，点云形状为 (N, 3)


def as_points(points) -> np.ndarray:
    """把点序列转换为 (N, 3) 浮点数组.

    Args:
        points: HPoint 序列或 (N, 3) 数组.

    Returns:
        (N, 3) 数组.

    Raises:
        ValidationError: 形状不正确或含非有限值.
    """
    if len(points) > 0 and isinstance(points[0], HPoint):
        array = np.array([[p.x, p.y, p.z] for p in points], dtype=float)
    else:
        array = np.asarray(points, dtype=float)
    if array.ndim != 2 or array.shape[1] != 3:
        raise ValidationError(f"点云形状必须为 (N, 3): {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValidationError("点云包含非有限坐标")
    return array


def norm_array(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """逐元素 Koranyi 范数."""
    return np.sqrt(np.hypot(x * x + y * y, z))


def chord_arrays(
    left: np.ndarray, right: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """成对弦 p_i^{-1}·q_j 的三个坐标.

    Args:
        left: (M, 3) 点 p_i.
        right: (N, 3) 点 q_j.

    Returns:
        (dx, dy, dz)，每个形状为 (M, N).
    """
    px, py, pz = left[:, 0, None], left[:, 1, None], left[:, 2, None]
    qx, qy, qz = right[None, :, 0], right[None, :, 1], right[None, :, 2]
    dx = qx - px
    dy = qy - py
    dz = (qz - pz) + 0.5 * (py * qx - px * qy)
    return dx, dy, dz


def chord_rows(
    left: np.ndarray, right: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """逐行弦 p_i^{-1}·q_i，left 与 right 形状相同 (N, 3)."""
    dx = right[:, 0] - left[:, 0]
    dy = right[:, 1] - left[:, 1]
    dz = (right[:, 2] - left[:, 2]) + 0.5 * (
        left[:, 1] * right[:, 0] - left[:, 0] * right[:, 1]
    )
    return dx, dy, dz


def pairwise_distances(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """成对距离矩阵 d(p_i, q_j) = ‖p_i^{-1} q_j‖.

    Args:
        left: (M, 3) 点.
        right: (N, 3) 点.

    Returns:
        (M, N) 距离矩阵.
    """
    dx, dy, dz = chord_arrays(left, right)
    return norm_array(dx, dy, dz)


def translate_array(g: HPoint, points: np.ndarray) -> np.ndarray:
    """左平移整个点云 g·p_i.

    Args:
        g: 平移元素.
        points: (N, 3) 点云.

    Returns:
        平移后的 (N, 3) 点云.
    """
    out = np.empty_like(points)
    out[:, 0] = g.x + points[:, 0]
    out[:, 1] = g.y + points[:, 1]
    out[:, 2] = g.z + points[:, 2] + 0.5 * (g.x * points[:, 1] - g.y * points[:, 0])
    return out


def dilate_array(r: float, points: np.ndarray) -> np.ndarray:
    """伸缩整个点云.

    Raises:
        ValidationError: r 非正.
    """
    if not r > 0:
        raise ValidationError(f"伸缩因子必须为正: {r}")
    out = np.array(points, dtype=float, copy=True)
    out[:, :2] *= r
    out[:, 2] *= r * r
    return out
