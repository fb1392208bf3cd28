"""核函数 CZ 性质审计.

基于带种子的随机采样检查 −1 齐次性、增长条件和 Hölder 连续性.
采样点一次性生成，再按索引区间分块并行求值，结果与分块方式无关.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.errors import ValidationError
from src.heisenberg import norm_array
from src.parallel import map_blocks

from .base import CZParams, Kernel

logger = logging.getLogger(__name__)

# 增长条件的固定探针方向：坐标轴及对角方向
GROWTH_PROBES = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ]
)

DEFAULT_BLOCK = 65536


@dataclass
class Violation:
    """单条违例记录."""

    point: Tuple[float, ...]
    ratio: float
    bound: float

    def to_line(self) -> str:
        """序列化为一行 key=value 文本."""
        coords = " ".join(f"{v:.17g}" for v in self.point)
        return f"point=[{coords}] ratio={self.ratio:.17g} bound={self.bound:.17g}"


@dataclass
class AuditReport:
    """审计结果.

    Attributes:
        check: 检查名（growth / hoelder）.
        kernel: 核描述.
        sample_count: 样本数.
        max_ratio: 经验上确界.
        argmax: 取到上确界的样本坐标.
        bound: 比较常数 C_K.
        violations: 超出 bound 的样本.
    """

    check: str
    kernel: str
    sample_count: int
    max_ratio: float
    argmax: Tuple[float, ...]
    bound: float
    violations: List[Violation] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return bool(self.violations)

    def to_lines(self) -> List[str]:
        """每条违例一行，附带检查名和核描述."""
        return [f"check={self.check} kernel={self.kernel} {v.to_line()}" for v in self.violations]


def _uniform_cube(rng: np.random.Generator, count: int) -> np.ndarray:
    """[-1, 1]³ 中的均匀样本，排除单位元."""
    points = rng.uniform(-1.0, 1.0, size=(count, 3))
    zero = ~np.any(points, axis=1)
    points[zero] = [1.0, 0.0, 0.0]
    return points


def _check_count(sample_count: int) -> None:
    if sample_count <= 0:
        raise ValidationError(f"sample_count 必须为正: {sample_count}")


def _block_max(values_func, total: int, workers: Optional[int]) -> Tuple[float, int]:
    """分块求最大值及其全局索引."""

    def run(start: int, stop: int) -> Tuple[float, int]:
        values = values_func(start, stop)
        if values.size == 0:
            return 0.0, start
        local = int(np.argmax(values))
        return float(values[local]), start + local

    results = map_blocks(run, total, DEFAULT_BLOCK, workers)
    best_value, best_index = 0.0, 0
    for value, index in results:
        if value > best_value:
            best_value, best_index = value, index
    return best_value, best_index


def check_homogeneity(
    kernel: Kernel,
    sample_count: int,
    scale_range: Tuple[float, float] = (1e-3, 1e3),
    seed: int = 0,
    workers: Optional[int] = None,
) -> float:
    """检查 −1 齐次性 t·K(δ_t p) = K(p).

    Args:
        kernel: 待检查的核.
        sample_count: 样本数.
        scale_range: 伸缩因子 t 的范围（按对数均匀采样）.
        seed: 随机种子.
        workers: 并行线程数.

    Returns:
        K(p) > 0 的样本上 |t·K(δ_t p) − K(p)| / K(p) 的最大值.

    Raises:
        ValidationError: 参数非法.
    """
    _check_count(sample_count)
    low, high = scale_range
    if not 0 < low <= high:
        raise ValidationError(f"伸缩范围非法: {scale_range}")

    rng = np.random.default_rng(seed)
    points = _uniform_cube(rng, sample_count)
    scales = np.exp(rng.uniform(math.log(low), math.log(high), size=sample_count))

    def deviations(start: int, stop: int) -> np.ndarray:
        p = points[start:stop]
        t = scales[start:stop]
        base = kernel.evaluate_array(p[:, 0], p[:, 1], p[:, 2])
        scaled = t * kernel.evaluate_array(t * p[:, 0], t * p[:, 1], t * t * p[:, 2])
        mask = base > 0
        return np.abs(scaled[mask] - base[mask]) / base[mask]

    deviation, _ = _block_max(deviations, sample_count, workers)
    logger.debug(f"齐次性检查 {kernel.spec}: 最大相对偏差 {deviation:.3e}")
    return deviation


def check_growth(
    kernel: Kernel,
    params: CZParams,
    sample_count: int,
    seed: int = 0,
    workers: Optional[int] = None,
) -> AuditReport:
    """检查增长条件 K(p) ≤ C_K / ‖p‖.

    除随机样本外总是包含坐标轴和对角方向上的探针点.

    Args:
        kernel: 待检查的核.
        params: CZ 参数，使用其中的 c_k.
        sample_count: 随机样本数.
        seed: 随机种子.
        workers: 并行线程数.

    Returns:
        AuditReport，ratio 为 K(p)·‖p‖.
    """
    _check_count(sample_count)
    rng = np.random.default_rng(seed)
    points = np.vstack([GROWTH_PROBES, _uniform_cube(rng, sample_count)])

    def ratios(start: int, stop: int) -> np.ndarray:
        p = points[start:stop]
        return kernel.evaluate_array(p[:, 0], p[:, 1], p[:, 2]) * norm_array(
            p[:, 0], p[:, 1], p[:, 2]
        )

    max_ratio, index = _block_max(ratios, len(points), workers)
    all_ratios = ratios(0, len(points))
    violations = [
        Violation(tuple(float(v) for v in points[i]), float(all_ratios[i]), params.c_k)
        for i in np.flatnonzero(all_ratios > params.c_k)
    ]
    report = AuditReport(
        check="growth",
        kernel=kernel.spec,
        sample_count=len(points),
        max_ratio=max_ratio,
        argmax=tuple(float(v) for v in points[index]),
        bound=params.c_k,
        violations=violations,
    )
    logger.info(
        f"增长条件 {kernel.spec}: 上确界 {max_ratio:.6g}, 违例 {len(violations)} 条"
    )
    return report


def hoelder_pairs(
    params: CZParams, sample_count: int, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """生成满足 d(p₁, p₂) ≤ κ‖p₁‖ 的点对.

    p₂ = p₁·h，h 的范数为 s·κ‖p₁‖，s ∈ [0, 1]；s = 0 给出 p₁ = p₂.

    Returns:
        (p1, h) 两个 (N, 3) 数组.
    """
    rng = np.random.default_rng(seed)
    p1 = _uniform_cube(rng, sample_count)
    direction = _uniform_cube(rng, sample_count)
    unit = norm_array(direction[:, 0], direction[:, 1], direction[:, 2])
    fraction = rng.uniform(0.0, 1.0, size=sample_count)
    # 每 64 个样本保留一个重合点对
    fraction[::64] = 0.0
    radius = fraction * params.kappa * norm_array(p1[:, 0], p1[:, 1], p1[:, 2]) / unit
    h = np.empty_like(direction)
    h[:, 0] = radius * direction[:, 0]
    h[:, 1] = radius * direction[:, 1]
    h[:, 2] = radius * radius * direction[:, 2]
    return p1, h


def check_hoelder(
    kernel: Kernel,
    params: CZParams,
    sample_count: int,
    seed: int = 0,
    workers: Optional[int] = None,
) -> AuditReport:
    """检查 Hölder 连续性.

    对 d(p₁, p₂) ≤ κ‖p₁‖ 的点对计算
    |K(p₁) − K(p₂)|·‖p₁‖^{1+β} / ‖p₂⁻¹p₁‖^β，重合点对记为 0.

    Args:
        kernel: 待检查的核.
        params: CZ 参数 (κ, β, C_K).
        sample_count: 点对数.
        seed: 随机种子.
        workers: 并行线程数.

    Returns:
        AuditReport.
    """
    _check_count(sample_count)
    p1, h = hoelder_pairs(params, sample_count, seed)
    beta = params.beta

    def ratios(start: int, stop: int) -> np.ndarray:
        a = p1[start:stop]
        g = h[start:stop]
        bx = a[:, 0] + g[:, 0]
        by = a[:, 1] + g[:, 1]
        bz = a[:, 2] + g[:, 2] + 0.5 * (a[:, 0] * g[:, 1] - a[:, 1] * g[:, 0])
        step = norm_array(g[:, 0], g[:, 1], g[:, 2])
        out = np.zeros(stop - start)
        moved = step > 0
        k1 = kernel.evaluate_array(a[moved, 0], a[moved, 1], a[moved, 2])
        k2 = kernel.evaluate_array(bx[moved], by[moved], bz[moved])
        n1 = norm_array(a[moved, 0], a[moved, 1], a[moved, 2])
        out[moved] = np.abs(k1 - k2) * n1 ** (1.0 + beta) / step[moved] ** beta
        return out

    max_ratio, index = _block_max(ratios, sample_count, workers)
    all_ratios = ratios(0, sample_count)
    violations = [
        Violation(
            tuple(float(v) for v in np.concatenate([p1[i], h[i]])),
            float(all_ratios[i]),
            params.c_k,
        )
        for i in np.flatnonzero(all_ratios > params.c_k)
    ]
    report = AuditReport(
        check="hoelder",
        kernel=kernel.spec,
        sample_count=sample_count,
        max_ratio=max_ratio,
        argmax=tuple(float(v) for v in np.concatenate([p1[index], h[index]])),
        bound=params.c_k,
        violations=violations,
    )
    logger.info(
        f"Hölder 检查 {kernel.spec}: 上确界 {max_ratio:.6g}, 违例 {len(violations)} 条"
    )
    return report
