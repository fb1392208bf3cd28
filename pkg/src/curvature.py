"""度量 Menger 曲率模块.

三点的 Menger 曲率取其比较三角形（边长为三对 Koranyi 距离）外接圆半径的倒数.
Σ(α) 三元组满足 min d ≥ α·max d，即三条边落在同一窗口 [αr, r] 内.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.errors import ValidationError
from src.heisenberg import HPoint, dist, pairwise_distances
from src.measure import DiscreteMeasure
from src.parallel import map_blocks

logger = logging.getLogger(__name__)

DEFAULT_TRIPLE_BUDGET = 5_000_000
ORDERED_FACTOR = 6
DEGENERACY_ULPS = 4


def menger_from_sides(a, b, c) -> np.ndarray:
    """由三边长计算 4A/(abc)，向量化.

    面积用排序后的稳定 Heron 公式. 最短边与另两边之差只差舍入误差
    （z − (x − y) ≤ 4·eps·x）时视为退化三角形，曲率取 0.
    """
    sides = np.sort(np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))), axis=0)
    z, y, x = sides[0], sides[1], sides[2]
    slack = z - (x - y)
    flat = slack <= DEGENERACY_ULPS * np.finfo(float).eps * x
    factors = (
        (x + (y + z))
        * np.maximum(slack, 0.0)
        * np.maximum(z + (x - y), 0.0)
        * np.maximum(x + (y - z), 0.0)
    )
    # 4A = sqrt(factors)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(flat, 0.0, np.sqrt(factors) / (x * y * z))


def menger(p1: HPoint, p2: HPoint, p3: HPoint) -> float:
    """三点的 Menger 曲率.

    Raises:
        ValidationError: 存在重合点.
    """
    a, b, c = dist(p2, p3), dist(p1, p3), dist(p1, p2)
    if a == 0 or b == 0 or c == 0:
        raise ValidationError("Menger 曲率要求三点互不相同")
    return float(menger_from_sides(a, b, c))


def in_sigma(a, b, c, alpha: float) -> np.ndarray:
    """三边是否落在同一窗口 [αr, r] 内."""
    low = np.minimum(np.minimum(a, b), c)
    high = np.maximum(np.maximum(a, b), c)
    return low >= alpha * high


@dataclass
class TripleFamily:
    """球 B(center, R) 内的 Σ(α) 三元组.

    Attributes:
        alpha: 窗口参数 α.
        center: 球心.
        radius_cap: 半径 R.
        atoms: 球内原子在原测度中的下标.
        indices: (K, 3) 三元组（球内局部下标，i < j < k）.
        exhaustive: 是否穷举.
        population: 球内全部无序三元组数 C(N, 3).
        draws: 抽样次数（穷举时为 population）.
    """

    alpha: float
    center: HPoint
    radius_cap: float
    atoms: np.ndarray
    indices: np.ndarray
    exhaustive: bool
    population: int
    draws: int


@dataclass
class CurvatureSumReport:
    """曲率能量 Σ w_i w_j w_k c² 的结果（按有序三元组计数）."""

    energy: float
    radius_cap: float
    triple_count: int
    mode: str
    seed: int
    alpha: float
    standard_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "radius_cap": self.radius_cap,
            "triple_count": self.triple_count,
            "mode": self.mode,
            "seed": self.seed,
            "alpha": self.alpha,
            "standard_error": self.standard_error,
        }


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha 必须在 (0, 1) 内: {alpha}")


def _ball(m: DiscreteMeasure, center: HPoint, radius_cap: float) -> Tuple[np.ndarray, np.ndarray]:
    if not radius_cap > 0:
        raise ValidationError(f"半径必须为正: {radius_cap}")
    atoms = np.flatnonzero(m.distances_from(center) <= radius_cap)
    points = m.points[atoms]
    return atoms, pairwise_distances(points, points)


def _leading_triples(d: np.ndarray, alpha: float, i: int) -> np.ndarray:
    """以 i 为首下标的 Σ(α) 三元组 (i, j, k)，i < j < k.

    Σ(α) 要求 d_ik ∈ [α·d_ij, d_ij/α]. 把 j > i 按 d_ij 排序后，
    每个 j 的候选 k 是排序序列中的一个连续窗口，用 searchsorted 定位.
    """
    later = np.arange(i + 1, len(d))
    order = later[np.argsort(d[i, later], kind="stable")]
    radii = d[i, order]
    low = np.searchsorted(radii, alpha * radii, side="left")
    # 上界放宽几个 ulp，边界情形交给 in_sigma 判定
    high = np.searchsorted(radii, radii / alpha * (1 + 4 * np.finfo(float).eps), side="right")
    lengths = high - low
    total = int(lengths.sum())
    if total == 0:
        return np.empty((0, 3), dtype=int)

    # 拼接各窗口 [low, high) 内的位置
    offsets = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    j = np.repeat(order, lengths)
    k = order[np.repeat(low, lengths) + offsets]
    keep = k > j
    j, k = j[keep], k[keep]
    keep = in_sigma(d[i, j], d[i, k], d[j, k], alpha)
    j, k = j[keep], k[keep]
    # 按 (j, k) 字典序输出
    rank = np.lexsort((k, j))
    return np.column_stack([np.full(len(rank), i), j[rank], k[rank]])


def _leading_count(d: np.ndarray, alpha: float, start: int, stop: int, limit: int) -> int:
    """i ∈ [start, stop) 的三元组计数，超过 limit 后提前停止."""
    count = 0
    for i in range(start, stop):
        count += len(_leading_triples(d, alpha, i))
        if count > limit:
            break
    return count


def _leading_block(d: np.ndarray, alpha: float, start: int, stop: int) -> List[np.ndarray]:
    """以 i ∈ [start, stop) 为首下标的 Σ(α) 三元组."""
    found = [_leading_triples(d, alpha, i) for i in range(start, stop)]
    return [triples for triples in found if len(triples)]


def _sample_triples(n: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """均匀抽取 draws 个互不相同的三元组（可重复抽到同一三元组）."""
    i = rng.integers(0, n, size=draws)
    j = rng.integers(0, n - 1, size=draws)
    j += j >= i
    k = rng.integers(0, n - 2, size=draws)
    low, high = np.minimum(i, j), np.maximum(i, j)
    k += k >= low
    k += k >= high
    return np.sort(np.column_stack([i, j, k]), axis=1)


def sigma_enumerate(
    m: DiscreteMeasure,
    alpha: float,
    center: HPoint,
    radius_cap: float,
    budget: int = DEFAULT_TRIPLE_BUDGET,
    seed: int = 0,
    workers: Optional[int] = None,
) -> TripleFamily:
    """枚举或抽样球内的 Σ(α) 三元组.

    先按距离窗口剪枝统计 Σ(α) 三元组个数；不超过 budget 时按首下标分块穷举,
    否则有放回地均匀抽取 budget 个三元组，只保留落在 Σ(α) 内的那些,
    能量估计按 population/draws 加权.

    Args:
        m: 离散测度.
        alpha: 窗口参数 α ∈ (0, 1).
        center: 球心.
        radius_cap: 球半径 R.
        budget: 三元组预算.
        seed: 抽样种子.
        workers: 并行线程数.

    Returns:
        TripleFamily.
    """
    _check_alpha(alpha)
    if budget <= 0:
        raise ValidationError(f"budget 必须为正: {budget}")
    atoms, d = _ball(m, center, radius_cap)
    n = len(atoms)
    population = math.comb(n, 3)

    if population <= budget:
        admissible = population
    else:
        counts = map_blocks(lambda s, e: _leading_count(d, alpha, s, e, budget), n, 16, workers)
        admissible = sum(counts)

    if admissible <= budget:
        blocks = map_blocks(lambda s, e: _leading_block(d, alpha, s, e), n, 16, workers)
        found = [triples for block in blocks for triples in block]
        indices = np.vstack(found) if found else np.empty((0, 3), dtype=int)
        exhaustive, draws = True, population
    else:
        rng = np.random.default_rng(seed)
        sample = _sample_triples(n, budget, rng)
        i, j, k = sample.T
        indices = sample[in_sigma(d[i, j], d[i, k], d[j, k], alpha)]
        exhaustive, draws = False, budget

    logger.debug(
        f"Σ({alpha:g}) 三元组: 球内 {n} 个原子, {len(indices)} 个三元组 "
        f"({'穷举' if exhaustive else '抽样'})"
    )
    return TripleFamily(
        alpha=alpha,
        center=center,
        radius_cap=radius_cap,
        atoms=atoms,
        indices=indices,
        exhaustive=exhaustive,
        population=population,
        draws=draws,
    )


def curvature_energy(
    m: DiscreteMeasure,
    alpha: float,
    center: HPoint,
    radius_cap: float,
    budget: int = DEFAULT_TRIPLE_BUDGET,
    seed: int = 0,
    workers: Optional[int] = None,
) -> CurvatureSumReport:
    """Σ(α) ∩ B(center, R)³ 上的 Σ w_i w_j w_k c(p_i, p_j, p_k)²（有序三元组）.

    抽样模式下为无偏估计并给出标准误差.
    """
    family = sigma_enumerate(m, alpha, center, radius_cap, budget, seed, workers)
    points = m.points[family.atoms]
    weights = m.weights[family.atoms]
    d = pairwise_distances(points, points)

    i, j, k = family.indices.T if len(family.indices) else (np.empty(0, dtype=int),) * 3
    curvature = menger_from_sides(d[j, k], d[i, k], d[i, j])
    terms = weights[i] * weights[j] * weights[k] * curvature**2

    if family.exhaustive:
        energy = ORDERED_FACTOR * math.fsum(terms)
        error = 0.0
        mode = "exhaustive"
    else:
        # 未命中 Σ(α) 的抽样贡献 0
        full = np.zeros(family.draws)
        full[: len(terms)] = terms
        scale = ORDERED_FACTOR * family.population
        energy = scale * math.fsum(full) / family.draws
        error = scale * float(np.std(full, ddof=1)) / math.sqrt(family.draws) if family.draws > 1 else 0.0
        mode = "sampled"

    report = CurvatureSumReport(
        energy=energy,
        radius_cap=radius_cap,
        triple_count=len(family.indices),
        mode=mode,
        seed=seed,
        alpha=alpha,
        standard_error=error,
    )
    logger.info(
        f"曲率能量 R={radius_cap:g}: {energy:.6g} ({report.triple_count} 个三元组, {mode})"
    )
    return report
