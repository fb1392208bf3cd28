"""截断奇异积分算子的离散化.

核矩阵 A_ij = K(p_i⁻¹p_j)·w_j·1[d(p_i, p_j) > ε]（对角为 0），作用于原子上的函数;
谱估计使用对称化形式 S_ij = K(p_i⁻¹p_j)·(w_i w_j)^{1/2}.

所有行归约按行块并行计算，块内按行求和，最后按行序做补偿求和,
因此结果与 worker 数和分块方式无关.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConvergenceError, SingularityError, ValidationError
from src.heisenberg import chord_arrays, norm_array
from src.kernels import Kernel
from src.measure import DiscreteMeasure
from src.parallel import map_blocks

logger = logging.getLogger(__name__)

ROW_BLOCK = 256


@dataclass
class KernelMatrix:
    """截断核矩阵.

    Attributes:
        entries: (N, N) 非负矩阵，entries[i, j] = K(p_i⁻¹p_j)·w_j，截断处与对角为 0.
        weights: (N,) 原子权重.
        epsilon: 截断半径.
        kernel: 核描述.
    """

    entries: np.ndarray
    weights: np.ndarray
    epsilon: float = 0.0
    kernel: str = "custom"

    @property
    def size(self) -> int:
        return len(self.weights)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """T_ε f 在各原子上的值."""
        return self.entries @ np.asarray(f, dtype=float)

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def symmetrized(self) -> np.ndarray:
        """S_ij = A_ij·(w_i/w_j)^{1/2} = K(p_i⁻¹p_j)·(w_i w_j)^{1/2}."""
        root = np.sqrt(self.weights)
        return self.entries * root[:, None] / root[None, :]

    def bilinear(self, f: np.ndarray, g: np.ndarray) -> float:
        """Σ_i g_i w_i (T_ε f)_i."""
        values = np.asarray(g, dtype=float) * self.weights * self.apply(f)
        return math.fsum(values)


@dataclass
class QuadFormResult:
    """二次型 ⟨T_ε χ, χ⟩ 的结果."""

    value: float
    epsilon: float
    kernel: str
    measure: str
    point_count: int


def _check_epsilon(epsilon: float) -> None:
    if not epsilon >= 0:
        raise ValidationError(f"epsilon 必须非负: {epsilon}")


def _kernel_block(
    kernel: Kernel, points: np.ndarray, epsilon: float, start: int, stop: int
) -> np.ndarray:
    """第 start..stop 行的 K(p_i⁻¹p_j)·1[d > ε]（不含权重）."""
    dx, dy, dz = chord_arrays(points[start:stop], points)
    distance = norm_array(dx, dy, dz)
    zero = distance == 0
    if np.count_nonzero(zero) != stop - start:
        rows, cols = np.nonzero(zero)
        for r, c in zip(rows, cols):
            if start + r != c:
                raise SingularityError(f"原子 {start + r} 与 {c} 重合, 核矩阵奇异")
    mask = distance > epsilon
    values = np.zeros_like(distance)
    values[mask] = kernel.evaluate_array(dx[mask], dy[mask], dz[mask])
    return values


def kernel_matrix(
    kernel: Kernel,
    m: DiscreteMeasure,
    epsilon: float = 0.0,
    workers: Optional[int] = None,
) -> KernelMatrix:
    """组装截断核矩阵.

    Args:
        kernel: 核.
        m: 离散测度.
        epsilon: 截断半径 ε ≥ 0.
        workers: 并行线程数.

    Returns:
        KernelMatrix.

    Raises:
        ValidationError: ε 为负.
        SingularityError: 存在重合原子.
    """
    _check_epsilon(epsilon)
    points, weights = m.points, m.weights

    def run(start: int, stop: int) -> np.ndarray:
        return _kernel_block(kernel, points, epsilon, start, stop) * weights[None, :]

    blocks = map_blocks(run, m.size, ROW_BLOCK, workers)
    entries = np.vstack(blocks) if blocks else np.zeros((0, 0))
    return KernelMatrix(entries=entries, weights=weights.copy(), epsilon=epsilon, kernel=kernel.spec)


def row_sums(
    kernel: Kernel,
    m: DiscreteMeasure,
    epsilon: float = 0.0,
    workers: Optional[int] = None,
) -> np.ndarray:
    """各行 Σ_{j≠i, d>ε} K(p_i⁻¹p_j)·w_j，按行块流式计算而不保存整个矩阵."""
    _check_epsilon(epsilon)
    points, weights = m.points, m.weights

    def run(start: int, stop: int) -> np.ndarray:
        values = _kernel_block(kernel, points, epsilon, start, stop)
        return (values * weights[None, :]).sum(axis=1)

    blocks = map_blocks(run, m.size, ROW_BLOCK, workers)
    return np.concatenate(blocks) if blocks else np.zeros(0)


def quadratic_form(
    kernel: Kernel,
    m: DiscreteMeasure,
    epsilon: float = 0.0,
    workers: Optional[int] = None,
) -> QuadFormResult:
    """⟨T_ε 1, 1⟩ = Σ_{i≠j, d>ε} w_i w_j K(p_i⁻¹p_j)."""
    sums = row_sums(kernel, m, epsilon, workers)
    value = math.fsum(m.weights * sums)
    logger.debug(f"二次型 {kernel.spec} ε={epsilon:g}: {value:.17g}")
    return QuadFormResult(
        value=value,
        epsilon=epsilon,
        kernel=kernel.spec,
        measure=m.label,
        point_count=m.size,
    )


def local_quadratic_form(
    kernel: Kernel,
    m: DiscreteMeasure,
    center,
    radius: float,
    epsilon: float = 0.0,
    workers: Optional[int] = None,
) -> QuadFormResult:
    """⟨T_ε χ_R, χ_R⟩，χ_R 为闭球 B(center, radius) 的示性函数."""
    return quadratic_form(kernel, m.restrict(center, radius), epsilon, workers)


def row_sup(
    kernel: Kernel,
    m: DiscreteMeasure,
    epsilon: float = 0.0,
    workers: Optional[int] = None,
) -> float:
    """max_i Σ_{j≠i, d>ε} K(p_i⁻¹p_j)·w_j."""
    sums = row_sums(kernel, m, epsilon, workers)
    return float(sums.max()) if sums.size else 0.0


def symmetrized_row_sup(a: KernelMatrix) -> float:
    """对称化矩阵的最大行和（对称非负矩阵谱半径的 Schur 上界）."""
    if a.size == 0:
        return 0.0
    return float(a.symmetrized().sum(axis=1).max())


def _matvec(matrix: np.ndarray, x: np.ndarray, workers: Optional[int]) -> np.ndarray:
    blocks = map_blocks(lambda s, e: matrix[s:e] @ x, len(x), 1024, workers)
    return np.concatenate(blocks)


def l2_norm_estimate(
    a: KernelMatrix,
    weights: Optional[np.ndarray] = None,
    tolerance: float = 1e-10,
    max_iterations: int = 1000,
    seed: int = 0,
    workers: Optional[int] = None,
) -> float:
    """用幂迭代估计对称化算子的最大特征值.

    迭代 S + σI（σ 为最大行和的一半）以区分 ±ρ，返回 S 的 Rayleigh 商.

    Args:
        a: 核矩阵.
        weights: 原子权重，默认取 a.weights.
        tolerance: 相邻 Rayleigh 商的相对收敛阈值.
        max_iterations: 最大迭代次数.
        seed: 初始向量种子.
        workers: 并行线程数.

    Returns:
        ‖T_ε‖ 的估计.

    Raises:
        ValidationError: tolerance 非正.
        ConvergenceError: 未在 max_iterations 内收敛.
    """
    if not tolerance > 0:
        raise ValidationError(f"tolerance 必须为正: {tolerance}")
    if weights is not None:
        a = KernelMatrix(a.entries, np.asarray(weights, dtype=float), a.epsilon, a.kernel)
    if a.size == 0:
        return 0.0
    s = a.symmetrized()
    shift = 0.5 * float(s.sum(axis=1).max())
    if shift == 0.0:
        return 0.0

    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 1.5, size=a.size)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for iteration in range(1, max_iterations + 1):
        sx = _matvec(s, x, workers)
        current = float(x @ sx)
        y = sx + shift * x
        x = y / np.linalg.norm(y)
        if iteration > 1 and abs(current - estimate) < tolerance * abs(current):
            logger.debug(f"幂迭代在第 {iteration} 次收敛: {current:.17g}")
            return current
        estimate = current

    raise ConvergenceError(
        f"幂迭代 {max_iterations} 次未收敛, 最后估计 {estimate:.17g}",
        last_estimate=estimate,
        iterations=max_iterations,
    )


def norm_profile(
    kernel: Kernel,
    m: DiscreteMeasure,
    epsilons: Sequence[float],
    tolerance: float = 1e-10,
    max_iterations: int = 1000,
    seed: int = 0,
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """不同截断半径下的算子范数估计 [(ε, ‖T_ε‖)]."""
    profile = []
    for epsilon in epsilons:
        a = kernel_matrix(kernel, m, epsilon, workers)
        profile.append((float(epsilon), l2_norm_estimate(a, None, tolerance, max_iterations, seed, workers)))
    return profile
