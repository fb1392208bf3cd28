"""水平提升模块.

平面折线的水平提升、对数振荡曲线的闭式提升、四进 Cantor 集的提升,
以及基于弦竖直分量（带符号面积）的下界扫描.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import BudgetExceededError, ValidationError
from src.heisenberg import HPoint, chord_arrays, group_mul, inverse, norm_array
from src.koch import DEFAULT_J0, PIECES, AngleSchedule, Word, locate_segment, refine_segment, segment_length
from src.parallel import map_blocks

logger = logging.getLogger(__name__)

AREA_CONSTANT = math.pi / math.sqrt(8.0) - 0.5
LOG_CURVE_MAX_INTERVAL = 112
DEFAULT_CANTOR_BUDGET = 2**13

# 第 n 级父线段局部细化 3 级后，片 1 与片 4 对应的顶点区间
_LOCAL_STAGES = 3
_PIECE_SPAN = PIECES ** (_LOCAL_STAGES - 1)
_PIECE1 = slice(0, _PIECE_SPAN + 1)
_PIECE4 = slice(3 * _PIECE_SPAN, 4 * _PIECE_SPAN + 1)


@dataclass
class LiftedPolyline:
    """平面折线的水平提升.

    Attributes:
        vertices: (N, 3) 顶点.
        words: 各线段的词（可选）.
    """

    vertices: np.ndarray
    words: Optional[List[str]] = None

    @property
    def planar(self) -> np.ndarray:
        return self.vertices[:, :2]

    @property
    def segment_count(self) -> int:
        return len(self.vertices) - 1

    def point(self, index: int) -> HPoint:
        return HPoint.from_array(self.vertices[index])


def segment_increments(planar: np.ndarray) -> np.ndarray:
    """各线段的竖直增量 ½(x_k y_{k+1} − y_k x_{k+1})."""
    x, y = planar[:, 0], planar[:, 1]
    return 0.5 * (x[:-1] * y[1:] - y[:-1] * x[1:])


def horizontal_lift(polyline, z0: float = 0.0, words: Optional[List[str]] = None) -> LiftedPolyline:
    """平面折线的水平提升.

    沿直线段对提升规则精确积分，首顶点高度为 z0.

    Args:
        polyline: (N, 2) 平面点，N ≥ 2.
        z0: 起点高度.
        words: 各线段的词（可选）.

    Returns:
        LiftedPolyline.

    Raises:
        ValidationError: 点数不足或含非有限值.
    """
    planar = np.asarray(polyline, dtype=float)
    if planar.ndim != 2 or planar.shape[1] != 2 or len(planar) < 2:
        raise ValidationError(f"折线至少需要 2 个平面点: {planar.shape}")
    if not np.all(np.isfinite(planar)):
        raise ValidationError("折线包含非有限坐标")

    z = np.empty(len(planar))
    z[0] = z0
    z[1:] = z0 + np.cumsum(segment_increments(planar))
    return LiftedPolyline(vertices=np.column_stack([planar, z]), words=words)


def lift_samples(lifted: LiftedPolyline, fractions: Sequence[float]) -> np.ndarray:
    """每条线段上按参数比例取点，并给出其精确提升.

    Args:
        lifted: 已提升的折线.
        fractions: [0, 1] 内的参数比例.

    Returns:
        (段数·len(fractions), 3) 数组，按线段再按比例排列.
    """
    f = np.asarray(fractions, dtype=float)
    start = lifted.vertices[:-1]
    delta = lifted.vertices[1:, :2] - start[:, :2]
    xy = start[:, None, :2] + f[None, :, None] * delta[:, None, :]
    z = start[:, None, 2] + 0.5 * (start[:, None, 0] * xy[..., 1] - start[:, None, 1] * xy[..., 0])
    return np.concatenate([xy, z[..., None]], axis=2).reshape(-1, 3)


def chord_vertical(p: HPoint, q: HPoint) -> float:
    """弦 p⁻¹q 的第三坐标，即两点间弧与弦围成的带符号面积."""
    return group_mul(inverse(p), q).z


# 对数振荡曲线 t ↦ (t, t sin log t) 的提升


def log_curve_point(t: float) -> HPoint:
    """对数振荡曲线的提升点.

    z(t) = t²(2cos log t + sin log t)/10，t → 0⁺ 时 z → 0.

    Raises:
        ValidationError: t ≤ 0.
    """
    if not t > 0:
        raise ValidationError(f"t 必须为正: {t}")
    u = math.log(t)
    return HPoint(t, t * math.sin(u), t * t * (2.0 * math.cos(u) + math.sin(u)) / 10.0)


def log_curve_points(t: np.ndarray, log_t: Optional[np.ndarray] = None) -> np.ndarray:
    """向量化版本；可直接给出 log t 以便利用 sin、cos 的周期性."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("t 必须为正")
    u = np.log(t) if log_t is None else np.asarray(log_t, dtype=float)
    return np.column_stack([t, t * np.sin(u), t * t * (2.0 * np.cos(u) + np.sin(u)) / 10.0])


def log_curve_interval(n: int) -> Tuple[float, float]:
    """I_n = [e^{2πn+π/2}, e^{2πn+3π/4}].

    Raises:
        ValidationError: n < 0 或超出双精度范围.
    """
    if not 0 <= n <= LOG_CURVE_MAX_INTERVAL:
        raise ValidationError(f"n 必须在 0..{LOG_CURVE_MAX_INTERVAL} 内: {n}")
    base = 2.0 * math.pi * n
    return math.exp(base + math.pi / 2), math.exp(base + 3 * math.pi / 4)


def log_curve_chord_bounds(
    samples: int, seed: int = 0, t_range: Tuple[float, float] = (1.0, math.exp(20.0))
) -> Tuple[float, float]:
    """经验常数 c₁, c₂：c₁|s−t| ≤ ‖γ(s)⁻¹γ(t)‖ ≤ c₂|s−t|.

    s, t 在 t_range 上按对数均匀采样.
    """
    if samples <= 0:
        raise ValidationError(f"samples 必须为正: {samples}")
    rng = np.random.default_rng(seed)
    low, high = (math.log(v) for v in t_range)
    s = np.exp(rng.uniform(low, high, size=samples))
    t = np.exp(rng.uniform(low, high, size=samples))
    keep = s != t
    p = log_curve_points(s[keep])
    q = log_curve_points(t[keep])
    dx = q[:, 0] - p[:, 0]
    dy = q[:, 1] - p[:, 1]
    dz = (q[:, 2] - p[:, 2]) + 0.5 * (p[:, 1] * q[:, 0] - p[:, 0] * q[:, 1])
    ratio = norm_array(dx, dy, dz) / np.abs(t[keep] - s[keep])
    return float(ratio.min()), float(ratio.max())


# 四进 Cantor 集 S 及其像 E = f(S)，f(t) = (t, 0, t)


@dataclass
class CantorLift:
    """深度 k 的四进 Cantor 集代表点.

    Attributes:
        depth: 深度 k.
        representatives: 2^k 个区间中点（递增）.
        weights: 每点权重 2^{−k}.
    """

    depth: int
    representatives: np.ndarray
    weights: np.ndarray = field(repr=False)

    @property
    def points(self) -> np.ndarray:
        """(2^k, 3) 数组 (t, 0, t)."""
        t = self.representatives
        return np.column_stack([t, np.zeros_like(t), t])


def cantor_build(depth: int, budget: int = DEFAULT_CANTOR_BUDGET) -> CantorLift:
    """构造四进 Cantor 集第 k 级（保留每个区间的首尾四分之一）.

    Args:
        depth: 深度 k ≥ 0.
        budget: 代表点数上限.

    Returns:
        CantorLift.

    Raises:
        ValidationError: depth < 0.
        BudgetExceededError: 2^k 超过预算.
    """
    if depth < 0:
        raise ValidationError(f"深度必须非负: {depth}")
    count = 2**depth
    if count > budget:
        raise BudgetExceededError(f"深度 {depth} 需要 {count} 个点, 超过预算 {budget}")

    left = np.zeros(1)
    for i in range(1, depth + 1):
        left = np.concatenate([left, left + 3.0 * 4.0**-i])
    left.sort()
    representatives = left + 0.5 * 4.0**-depth
    weights = np.full(count, 2.0**-depth)
    return CantorLift(depth=depth, representatives=representatives, weights=weights)


def cantor_points(c: CantorLift) -> List[Tuple[HPoint, float]]:
    """代表点 t ↦ (t, 0, t) 及其权重."""
    return [
        (HPoint(float(t), 0.0, float(t)), float(w))
        for t, w in zip(c.representatives, c.weights)
    ]


def cantor_chords(c: CantorLift) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """所有成对弦 p_i⁻¹p_j，精确具有 (d, 0, d) 形式."""
    points = c.points
    return chord_arrays(points, points)


def blowup_slopes(c: CantorLift, lam: float) -> np.ndarray:
    """范数 ≤ λ 的弦经 δ_{1/λ} 放大后的竖直/水平比.

    放大后的弦 (d/λ, 0, d/λ²) 落在 L_{1/λ} = {(u, 0, u/λ)} 上.

    Returns:
        所有非零此类弦的 z/x 比值，理论上全部等于 1/λ.
    """
    if not lam > 0:
        raise ValidationError(f"λ 必须为正: {lam}")
    dx, _, dz = cantor_chords(c)
    norms = norm_array(dx, np.zeros_like(dx), dz)
    mask = (norms <= lam) & (dx != 0)
    return (dz[mask] / (lam * lam)) / (dx[mask] / lam)


# 竖直分量下界扫描


@dataclass
class Lemma54Report:
    """比值 |NH(p⁻¹q)|²/(R_n²θ_n) 的扫描结果."""

    n: int
    min_ratio: float
    prefixes: int
    pairs: int
    exhaustive: bool
    analytic_constant: float


def lemma54_analytic_constant(schedule: AngleSchedule, n: int) -> float:
    """下界常数链 sinθ_n/θ_n·((4cosθ_{n+1}cosθ_n − 1)/(2+4cosθ_{n+1}) − 1/5)."""
    theta_n, theta_next = schedule.thetas(n, 2)
    head = (4.0 * math.cos(theta_next) * math.cos(theta_n) - 1.0) / (2.0 + 4.0 * math.cos(theta_next))
    return math.sin(theta_n) / theta_n * (head - 0.2)


def local_lift(
    prefix: Word, schedule: AngleSchedule, n: int, j0=DEFAULT_J0
) -> LiftedPolyline:
    """第 n−1 级父线段平移到原点后细化到第 n+2 级并提升.

    平面平移不改变同一提升曲线上两点弦的竖直分量.
    """
    a, b = locate_segment(prefix, schedule, j0)
    vertices = refine_segment((0.0, 0.0), b - a, schedule.thetas(n, _LOCAL_STAGES))
    return horizontal_lift(vertices)


def draw_prefixes(
    n: int, samples: int, seed: int
) -> Tuple[List[Word], bool]:
    """长度 n−1 的前缀：n ≤ 4 或总数不超过 samples 时穷举，否则抽样."""
    total = PIECES ** (n - 1)
    if n <= 4 or total <= samples:
        return [Word.from_index(i, n - 1) for i in range(total)], True
    rng = np.random.default_rng(seed)
    digits = rng.integers(1, PIECES + 1, size=(samples, n - 1))
    return [Word(tuple(row)) for row in digits], False


def lemma54_scan(
    schedule: AngleSchedule,
    n: int,
    samples: int = 100,
    seed: int = 0,
    j0=DEFAULT_J0,
    workers: Optional[int] = None,
) -> Lemma54Report:
    """扫描第 n 级的 |chord_vertical(p, q)|/(R_n²θ_n) 的最小值.

    p 取词在第 n 位为 1 的第 n+2 级顶点，q 取与 p 前 n−1 位相同且第 n 位为 4 的顶点.

    Args:
        schedule: 角度序列.
        n: 级数 n ≥ 1.
        samples: 需要抽样时的前缀数.
        seed: 随机种子.
        j0: 第 0 级线段.
        workers: 并行线程数.

    Returns:
        Lemma54Report.
    """
    if n < 1:
        raise ValidationError(f"n 必须 ≥ 1: {n}")
    if samples <= 0:
        raise ValidationError(f"samples 必须为正: {samples}")
    theta_n = schedule.theta(n)
    if theta_n == 0:
        raise ValidationError("θ_n = 0 时比值无定义")
    schedule.thetas(n, _LOCAL_STAGES)

    r0 = float(np.hypot(*np.subtract(j0[1], j0[0])))
    scale = segment_length(n, schedule, r0) ** 2 * theta_n
    prefixes, exhaustive = draw_prefixes(n, samples, seed)

    def scan(start: int, stop: int) -> float:
        best = math.inf
        for prefix in prefixes[start:stop]:
            lifted = local_lift(prefix, schedule, n, j0)
            p = lifted.vertices[_PIECE1]
            q = lifted.vertices[_PIECE4]
            _, _, dz = chord_arrays(p, q)
            best = min(best, float(np.abs(dz).min()))
        return best

    minimum = min(map_blocks(scan, len(prefixes), 64, workers))
    pairs = len(prefixes) * (_PIECE_SPAN + 1) ** 2
    report = Lemma54Report(
        n=n,
        min_ratio=minimum / scale,
        prefixes=len(prefixes),
        pairs=pairs,
        exhaustive=exhaustive,
        analytic_constant=lemma54_analytic_constant(schedule, n),
    )
    logger.info(
        f"n={n}: 最小比值 {report.min_ratio:.6g} ({pairs} 对, "
        f"{'穷举' if exhaustive else '抽样'}), 解析常数 {report.analytic_constant:.6g}"
    )
    return report
