"""离散测度模块.

用带权点云近似 H¹ 在提升曲线或 Cantor 集上的限制，并提供 Ahlfors 正则性审计.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ValidationError
from src.heisenberg import HPoint, as_points, chord_rows, norm_array, pairwise_distances, translate_array
from src.lifts import CantorLift, LiftedPolyline, lift_samples
from src.parallel import map_blocks

logger = logging.getLogger(__name__)

ROW_BLOCK = 512
SPACING_FACTOR = 4.0


@dataclass
class DiscreteMeasure:
    """有限带权点云.

    Attributes:
        points: (N, 3) 原子坐标.
        weights: (N,) 正权重.
        diameter: 最大成对距离；未给出时在构造时计算，给出时校验.
        label: 测度来源描述.
    """

    points: np.ndarray
    weights: np.ndarray
    diameter: Optional[float] = None
    label: str = "custom"
    workers: Optional[int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.points = as_points(self.points) if len(self.points) else np.empty((0, 3))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.points),):
            raise ValidationError(
                f"权重个数 {self.weights.shape} 与原子数 {len(self.points)} 不一致"
            )
        if np.any(~(self.weights > 0)):
            raise ValidationError("权重必须为正")

        computed = self._max_distance()
        if self.diameter is None:
            self.diameter = computed
        elif not math.isclose(self.diameter, computed, rel_tol=1e-12, abs_tol=1e-300):
            raise ValidationError(f"缓存直径 {self.diameter} 与实际 {computed} 不符")

    def _max_distance(self) -> float:
        n = len(self.points)
        if n < 2:
            return 0.0

        def run(start: int, stop: int) -> float:
            return float(pairwise_distances(self.points[start:stop], self.points).max())

        return max(map_blocks(run, n, ROW_BLOCK, self.workers))

    @property
    def size(self) -> int:
        return len(self.points)

    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        """权重乘以 factor."""
        if not factor > 0:
            raise ValidationError(f"缩放因子必须为正: {factor}")
        return DiscreteMeasure(self.points, self.weights * factor, self.diameter, self.label)

    def translate(self, g: HPoint) -> "DiscreteMeasure":
        """左平移全部原子."""
        return DiscreteMeasure(translate_array(g, self.points), self.weights, label=self.label)

    def distances_from(self, center) -> np.ndarray:
        """所有原子到 center 的距离."""
        c = np.asarray(center.as_array() if isinstance(center, HPoint) else center, dtype=float)
        return pairwise_distances(c[None, :], self.points)[0]

    def restrict(self, center, radius: float) -> "DiscreteMeasure":
        """限制到闭球 B(center, radius).

        Raises:
            ValidationError: 球内没有原子.
        """
        mask = self.distances_from(center) <= radius
        if not np.any(mask):
            raise ValidationError(f"半径 {radius} 的球内没有原子")
        return DiscreteMeasure(self.points[mask], self.weights[mask], label=f"{self.label}|ball")

    def point_spacing(self) -> float:
        """局部点距：各原子到最近其他原子距离的最大值."""
        n = self.size
        if n < 2:
            return 0.0

        def run(start: int, stop: int) -> float:
            d = pairwise_distances(self.points[start:stop], self.points)
            d[np.arange(stop - start), np.arange(start, stop)] = np.inf
            return float(d.min(axis=1).max())

        return max(map_blocks(run, n, ROW_BLOCK, self.workers))


def from_polyline(p: LiftedPolyline, subdivisions_per_segment: int = 1) -> DiscreteMeasure:
    """由提升折线构造离散测度.

    每条线段等分为若干小段，原子取小段参数中点，权重取小段的 Koranyi 弦长.

    Raises:
        ValidationError: 折线为空或细分数非法.
    """
    if subdivisions_per_segment < 1:
        raise ValidationError(f"细分数必须 ≥ 1: {subdivisions_per_segment}")
    if p.segment_count < 1:
        raise ValidationError("折线为空")
    s = subdivisions_per_segment
    ends = lift_samples(p, np.arange(s + 1) / s).reshape(p.segment_count, s + 1, 3)
    left = ends[:, :-1, :].reshape(-1, 3)
    right = ends[:, 1:, :].reshape(-1, 3)
    weights = norm_array(*chord_rows(left, right))
    points = lift_samples(p, (np.arange(s) + 0.5) / s)
    return DiscreteMeasure(points, weights, label=f"polyline[{p.segment_count}x{s}]")


def from_cantor(c: CantorLift) -> DiscreteMeasure:
    """由 Cantor 集代表点构造离散测度，总质量为 1."""
    return DiscreteMeasure(c.points, c.weights, label=f"cantor[{c.depth}]")


@dataclass
class RegularityReport:
    """Ahlfors 正则性审计结果.

    Attributes:
        centers: 被测中心的原子下标.
        radii: 被测半径.
        min_ratio: μ(B(p, r))/r 的最小值.
        max_ratio: μ(B(p, r))/r 的最大值.
        rows: (中心下标, 半径, 比值) 记录.
    """

    centers: List[int]
    radii: List[float]
    min_ratio: float
    max_ratio: float
    rows: List[Tuple[int, float, float]] = field(default_factory=list, repr=False)

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio


def ahlfors_check(
    m: DiscreteMeasure,
    center_sample: int,
    radii: Sequence[float],
    min_radius_floor: float,
    seed: int = 0,
    workers: Optional[int] = None,
) -> RegularityReport:
    """计算 μ(B(p, r))/r 在采样中心与给定半径上的极值.

    Args:
        m: 离散测度.
        center_sample: 中心个数，不小于原子数时取全部原子.
        radii: 半径序列，每个都须在 [min_radius_floor, diameter] 内.
        min_radius_floor: 半径下限，须 ≥ 4 倍局部点距.
        seed: 中心抽样种子.
        workers: 并行线程数.

    Returns:
        RegularityReport.

    Raises:
        ValidationError: 半径低于离散化下限或超出直径.
    """
    if center_sample <= 0:
        raise ValidationError(f"center_sample 必须为正: {center_sample}")
    radii = [float(r) for r in radii]
    if not radii:
        raise ValidationError("至少需要一个半径")
    spacing = m.point_spacing()
    if min_radius_floor < SPACING_FACTOR * spacing:
        raise ValidationError(
            f"半径下限 {min_radius_floor} 小于 {SPACING_FACTOR:g} 倍点距 {spacing:.6g}"
        )
    for r in radii:
        if not min_radius_floor <= r <= m.diameter:
            raise ValidationError(f"半径 {r} 不在 [{min_radius_floor}, {m.diameter}] 内")

    if center_sample >= m.size:
        centers = np.arange(m.size)
    else:
        rng = np.random.default_rng(seed)
        centers = np.sort(rng.choice(m.size, size=center_sample, replace=False))
    radius_array = np.asarray(radii)

    def run(start: int, stop: int) -> np.ndarray:
        d = pairwise_distances(m.points[centers[start:stop]], m.points)
        inside = d[:, None, :] <= radius_array[None, :, None]
        return (inside * m.weights[None, None, :]).sum(axis=2) / radius_array[None, :]

    ratios = np.vstack(map_blocks(run, len(centers), 64, workers))
    rows = [
        (int(c), r, float(ratios[i, j]))
        for i, c in enumerate(centers)
        for j, r in enumerate(radii)
    ]
    report = RegularityReport(
        centers=[int(c) for c in centers],
        radii=radii,
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        rows=rows,
    )
    logger.info(
        f"Ahlfors 审计 {m.label}: {len(centers)} 个中心 × {len(radii)} 个半径, "
        f"比值范围 [{report.min_ratio:.4g}, {report.max_ratio:.4g}]"
    )
    return report
