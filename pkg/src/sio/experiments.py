"""奇异积分发散与有界性实验.

- l1_divergence_scan：对数振荡曲线上逐区间 ∫_{I_n} K₄(γ(s)⁻¹γ(t)) dt.
- koch_stagewise_form：Koch 提升曲线上逐级的 F_n × E_{n,p} 双重积分.
- cantor_row_sup_sweep：Cantor 集上 K_b 最大行和随深度的变化.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import accumulate
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.errors import ValidationError
from src.heisenberg import chord_arrays, dilate_array
from src.kernels import AlphaKernel, BKernel, Kernel
from src.koch import DEFAULT_J0, AngleSchedule, segment_length
from src.lifts import LOG_CURVE_MAX_INTERVAL, cantor_build, draw_prefixes, lift_samples, local_lift, log_curve_points
from src.measure import from_cantor
from src.parallel import map_blocks

from .operators import row_sup

logger = logging.getLogger(__name__)

INTERVAL_START = math.pi / 2
INTERVAL_STOP = 3 * math.pi / 4
DEFAULT_PANELS = 8

# 局部细化 3 级后第 n+2 级线段中，片 1 与片 4 的下标区间
_PIECE_SEGMENTS = 36
_PIECE1 = slice(0, _PIECE_SEGMENTS)
_PIECE4 = slice(3 * _PIECE_SEGMENTS, 4 * _PIECE_SEGMENTS)


@dataclass
class SeriesRow:
    """逐级结果的一行：n, value, partial_sum, comparator."""

    n: int
    value: float
    partial_sum: float
    comparator: float

    def as_tuple(self) -> Tuple[int, float, float, float]:
        return (self.n, self.value, self.partial_sum, self.comparator)


@dataclass
class SeriesResult:
    """逐级实验结果."""

    name: str
    rows: List[SeriesRow] = field(default_factory=list)
    exhaustive: List[bool] = field(default_factory=list)

    @property
    def values(self) -> List[float]:
        return [row.value for row in self.rows]

    @property
    def partial_sums(self) -> List[float]:
        return [row.partial_sum for row in self.rows]


def _series(name: str, ns: Sequence[int], values: Sequence[float], comparators: Sequence[float]) -> SeriesResult:
    partials = list(accumulate(values, lambda acc, v: math.fsum([acc, v])))
    rows = [SeriesRow(n, v, s, c) for n, v, s, c in zip(ns, values, partials, comparators)]
    return SeriesResult(name=name, rows=rows)


def _log_interval_integral(
    kernel: Kernel, s: float, n: int, nodes: np.ndarray, weights: np.ndarray, panels: int
) -> float:
    """∫_{I_n} K(γ(s)⁻¹γ(t)) dt，对 u = log t 做复合 Gauss–Legendre 积分.

    先对两点同时施加 δ_{e^{−2πn}}：K 是 −1 齐次的而 dt 按 e^{2πn} 缩放,
    两者相互抵消，且放大后的曲线点只依赖 u − 2πn.
    """
    shift = 2.0 * math.pi * n
    edges = np.linspace(INTERVAL_START, INTERVAL_STOP, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()

    tau = np.exp(u)
    q = log_curve_points(tau, log_t=u)
    scale = math.exp(-shift)
    base = dilate_array(scale, log_curve_points(np.array([s])))
    dx, dy, dz = chord_arrays(base, q)
    values = kernel.evaluate_array(dx[0], dy[0], dz[0]) * tau
    return math.fsum(w * values)


def l1_divergence_scan(
    s: float = 1.0,
    n_range: Tuple[int, int] = (3, 20),
    quadrature_points: int = 32,
    kernel: Optional[Kernel] = None,
    panels: int = DEFAULT_PANELS,
) -> SeriesResult:
    """逐区间 ∫_{I_n} K₄(γ(s)⁻¹γ(t)) dt 及其部分和.

    Args:
        s: 固定的曲线参数 s > 0.
        n_range: 闭区间 [n_first, n_last].
        quadrature_points: 每个子区间的 Gauss–Legendre 节点数（≥ 16）.
        kernel: 核，默认 K₄.
        panels: 子区间数.

    Returns:
        SeriesResult，comparator 为 e^{−2πn}|I_n|.

    Raises:
        ValidationError: 参数越界.
    """
    first, last = n_range
    if not s > 0:
        raise ValidationError(f"s 必须为正: {s}")
    if not 0 <= first <= last <= LOG_CURVE_MAX_INTERVAL:
        raise ValidationError(f"n 范围必须在 0..{LOG_CURVE_MAX_INTERVAL} 内: {n_range}")
    if quadrature_points < 16:
        raise ValidationError(f"quadrature_points 必须 ≥ 16: {quadrature_points}")
    if panels < 1:
        raise ValidationError(f"panels 必须 ≥ 1: {panels}")
    kernel = kernel or AlphaKernel(4.0)

    nodes, weights = leggauss(quadrature_points)
    ns = list(range(first, last + 1))
    values = [_log_interval_integral(kernel, s, n, nodes, weights, panels) for n in ns]
    comparator = math.exp(INTERVAL_STOP) - math.exp(INTERVAL_START)
    result = _series("l1scan", ns, values, [comparator] * len(ns))
    logger.info(f"L¹ 扫描 n={first}..{last}: 部分和 {result.partial_sums[-1]:.6g}")
    return result


def stagewise_prefix_sum(
    schedule: AngleSchedule, n: int, prefix, kernel: Kernel, weight: float, j0=DEFAULT_J0
) -> float:
    """单个前缀下 Σ_{p∈F_n} Σ_{q∈E_{n,p}} w_p w_q K(p⁻¹q).

    原子取第 n+2 级线段的提升中点，片 1 为 F_n 部分、片 4 为 E_{n,p}.
    """
    midpoints = lift_samples(local_lift(prefix, schedule, n, j0), [0.5])
    dx, dy, dz = chord_arrays(midpoints[_PIECE1], midpoints[_PIECE4])
    return weight * weight * math.fsum(kernel.evaluate_array(dx, dy, dz).ravel())


def koch_stagewise_form(
    schedule: AngleSchedule,
    alpha_param: float = 0.5,
    stages: int = 8,
    pair_samples: int = 216,
    seed: int = 0,
    j0=DEFAULT_J0,
    workers: Optional[int] = None,
) -> SeriesResult:
    """逐级估计 ∫_{F_n} ∫_{E_{n,p}} K_{2α}(p⁻¹q) dq dp.

    第 n 级对长度 n−1 的前缀穷举（n ≤ 4 或 6^{n−1} ≤ pair_samples）或抽样,
    估计值为 6^{n−1} 乘以前缀和的平均. 不同级的 (p, q) 在第 n 位首次分叉，互不重叠.

    Args:
        schedule: 角度序列，须满足 Σθ < 1/2.
        alpha_param: α ∈ (0, 1)，核取 K_{2α}.
        stages: 最大级数.
        pair_samples: 抽样的前缀数.
        seed: 随机种子.
        j0: 第 0 级线段.
        workers: 并行线程数.

    Returns:
        SeriesResult，comparator 为 θ_n^α.

    Raises:
        ValidationError: 参数越界或角度序列不满足 Σθ < 1/2.
    """
    if not 0 < alpha_param < 1:
        raise ValidationError(f"alpha 必须在 (0, 1) 内: {alpha_param}")
    if stages < 1:
        raise ValidationError(f"stages 必须 ≥ 1: {stages}")
    if pair_samples <= 0:
        raise ValidationError(f"pair_samples 必须为正: {pair_samples}")
    if not schedule.satisfies_angle_condition():
        raise ValidationError(f"角度序列 {schedule.spec} 不满足 Σθ < 1/2")
    schedule.thetas(1, stages + 2)

    kernel = AlphaKernel(2.0 * alpha_param)
    r0 = float(np.hypot(*np.subtract(j0[1], j0[0])))
    ns = list(range(1, stages + 1))
    values, comparators, exhaustive_flags = [], [], []
    for n in ns:
        weight = segment_length(n + 2, schedule, r0)
        prefixes, exhaustive = draw_prefixes(n, pair_samples, seed + n)

        def run(start: int, stop: int) -> List[float]:
            return [
                stagewise_prefix_sum(schedule, n, prefix, kernel, weight, j0)
                for prefix in prefixes[start:stop]
            ]

        sums = [v for block in map_blocks(run, len(prefixes), 64, workers) for v in block]
        values.append(6 ** (n - 1) * math.fsum(sums) / len(sums))
        comparators.append(schedule.theta(n) ** alpha_param)
        exhaustive_flags.append(exhaustive)
        logger.debug(f"第 {n} 级贡献 {values[-1]:.6g} ({len(prefixes)} 个前缀)")

    result = _series("stagewise", ns, values, comparators)
    result.exhaustive = exhaustive_flags
    logger.info(f"逐级二次型 {schedule.spec}: S_{stages} = {result.partial_sums[-1]:.6g}")
    return result


def cantor_row_sup_sweep(
    depths: Sequence[int],
    kernel: Optional[Kernel] = None,
    epsilon: float = 0.0,
    budget: int = 2**13,
    workers: Optional[int] = None,
) -> List[Tuple[int, float, float]]:
    """各深度 Cantor 测度上的最大行和.

    Returns:
        [(depth, row_sup, 与上一深度的增量)]，首行增量为 nan.
    """
    kernel = kernel or BKernel()
    rows = []
    previous = math.nan
    for depth in depths:
        value = row_sup(kernel, from_cantor(cantor_build(depth, budget)), epsilon, workers)
        rows.append((depth, value, value - previous))
        previous = value
        logger.debug(f"深度 {depth}: 最大行和 {value:.17g}")
    return rows
