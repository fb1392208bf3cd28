"""平面 von Koch 型折线构造模块.

每一级把上一级的每条线段替换为 6 段等长折线（6 边形替换），
并提供角度序列、词寻址、段长 R_n、Lipschitz 上界与凸包包含检查.
"""

import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import zeta

from src.errors import BudgetExceededError, ValidationError
from src.parallel import map_blocks

logger = logging.getLogger(__name__)

DEFAULT_J0 = ((0.0, 0.0), (1.0, 0.0))
DEFAULT_VERTEX_BUDGET = 6**8 + 1
ANGLE_CONDITION = 0.5
PIECES = 6

_ANGLE_PATTERN = re.compile(
    r"^\s*(?:(?P<num>[0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>[0-9.eE+-]+))?\s*$"
)


def parse_angle(text: str) -> float:
    """解析角度文本，支持 "pi/3"、"2*pi/7"、"0.25" 等形式.

    Raises:
        ValidationError: 无法解析.
    """
    match = _ANGLE_PATTERN.match(text.lower())
    try:
        if match:
            num = float(match.group("num")) if match.group("num") else 1.0
            den = float(match.group("den")) if match.group("den") else 1.0
            return num * math.pi / den
        return float(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"无法解析角度: {text}") from e


class AngleSchedule(ABC):
    """角度序列 θ_n（1 起始）抽象基类."""

    @abstractmethod
    def theta(self, n: int) -> float:
        """第 n 级角度."""
        pass

    @abstractmethod
    def sum_bound(self, head: int) -> float:
        """Σθ_n 的上界：前 head 项直接求和，其余用解析尾部上界."""
        pass

    @property
    @abstractmethod
    def spec(self) -> str:
        pass

    @property
    def length(self) -> Optional[int]:
        """可用的级数，None 表示无限."""
        return None

    def thetas(self, start: int, count: int) -> List[float]:
        """θ_start, …, θ_{start+count−1}.

        Raises:
            ValidationError: 超出序列定义范围.
        """
        if self.length is not None and start + count - 1 > self.length:
            raise ValidationError(
                f"角度序列 {self.spec} 只定义了 {self.length} 级, 需要到第 {start + count - 1} 级"
            )
        return [self.theta(n) for n in range(start, start + count)]

    def satisfies_angle_condition(self, head: int = 1000) -> bool:
        """Σθ_n < 1/2 是否成立."""
        return self.sum_bound(head) < ANGLE_CONDITION

    def warn_angle_condition(self) -> None:
        if not self.satisfies_angle_condition():
            logger.warning(f"角度序列 {self.spec} 不满足 Σθ < 1/2, 图性质不再有保证")


@dataclass(frozen=True)
class PowerLaw(AngleSchedule):
    """θ_n = c·n^{−exponent}."""

    c: float
    exponent: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError(f"c 必须为正: {self.c}")
        if not self.exponent > 0:
            raise ValidationError(f"exponent 必须为正: {self.exponent}")
        if self.c >= math.pi / 2:
            raise ValidationError(f"θ_1 = c 必须小于 π/2: {self.c}")

    @property
    def spec(self) -> str:
        return f"powerlaw:{self.c:g}:{self.exponent:g}"

    def theta(self, n: int) -> float:
        if n < 1:
            raise ValidationError(f"角度下标从 1 开始: {n}")
        return self.c * n ** (-self.exponent)

    def tail_bound(self, head: int) -> float:
        """Σ_{n>head} θ_n ≤ ∫_head^∞ c·x^{−e} dx = c·head^{1−e}/(e−1)."""
        if self.exponent <= 1:
            return math.inf
        if head < 1:
            return self.exact_total()
        return self.c * head ** (1.0 - self.exponent) / (self.exponent - 1.0)

    def sum_bound(self, head: int) -> float:
        head_sum = math.fsum(self.theta(n) for n in range(1, head + 1))
        return head_sum + self.tail_bound(head)

    def exact_total(self) -> float:
        """c·ζ(exponent)，exponent ≤ 1 时为无穷."""
        if self.exponent <= 1:
            return math.inf
        return self.c * float(zeta(self.exponent))

    def max_admissible_c(self) -> float:
        """使 Σθ_n < 1/2 成立的 c 的上确界 1/(2ζ(exponent))."""
        if self.exponent <= 1:
            return 0.0
        return ANGLE_CONDITION / float(zeta(self.exponent))


@dataclass(frozen=True)
class Explicit(AngleSchedule):
    """显式给出的有限角度序列，允许 0（平直极限）."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        for v in values:
            if not 0 <= v < math.pi / 2:
                raise ValidationError(f"角度必须在 [0, π/2) 内: {v}")
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValidationError(f"角度序列必须非增: {values}")

    @property
    def spec(self) -> str:
        return "explicit:" + ",".join(f"{v:.17g}" for v in self.values)

    @property
    def length(self) -> int:
        return len(self.values)

    def theta(self, n: int) -> float:
        if not 1 <= n <= len(self.values):
            raise ValidationError(f"角度下标越界: {n}")
        return self.values[n - 1]

    def sum_bound(self, head: int) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class Word:
    """{1, …, 6} 上的有限词，寻址第 len(w) 级的一条线段."""

    digits: Tuple[int, ...]

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        for d in digits:
            if not 1 <= d <= PIECES:
                raise ValidationError(f"词中数字必须在 1..6 内: {d}")

    @classmethod
    def parse(cls, text: str) -> "Word":
        """从数字串（如 "142"）创建."""
        if not text.isdigit():
            raise ValidationError(f"无法解析词: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_index(cls, index: int, length: int) -> "Word":
        """第 length 级中从左数第 index 条线段（0 起始）的词."""
        digits = []
        for _ in range(length):
            index, rem = divmod(index, PIECES)
            digits.append(rem + 1)
        if index:
            raise ValidationError(f"下标超出第 {length} 级范围")
        return cls(tuple(reversed(digits)))

    @property
    def index(self) -> int:
        """线段在本级中的 0 起始下标."""
        value = 0
        for d in self.digits:
            value = value * PIECES + (d - 1)
        return value

    def __len__(self) -> int:
        return len(self.digits)

    def __str__(self) -> str:
        return "".join(str(d) for d in self.digits)


def replacement_matrices(theta: float) -> np.ndarray:
    """七个替换点关于 b−a 的线性系数矩阵，形状 (7, 2, 2)."""
    c, s = math.cos(theta), math.sin(theta)
    d = 2.0 + 4.0 * c
    identity = np.eye(2)
    return np.array(
        [
            np.zeros((2, 2)),
            identity / d,
            np.array([[1.0 + c, -s], [s, 1.0 + c]]) / d,
            identity / 2.0,
            np.array([[1.0 + 3.0 * c, s], [-s, 1.0 + 3.0 * c]]) / d,
            identity * ((1.0 + 4.0 * c) / d),
            identity,
        ]
    )


def _check_theta(theta: float) -> None:
    if not 0 <= theta < math.pi / 2:
        raise ValidationError(f"θ 必须在 [0, π/2) 内: {theta}")


def replace_segment(a: Sequence[float], b: Sequence[float], theta: float) -> np.ndarray:
    """把线段 ab 替换为 7 点折线.

    Args:
        a: 起点.
        b: 终点.
        theta: 角度 θ ∈ [0, π/2).

    Returns:
        (7, 2) 数组，首尾分别精确等于 a、b，六段等长 |b−a|/(2+4cosθ).

    Raises:
        ValidationError: 线段退化或 θ 越界.
    """
    _check_theta(theta)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.array_equal(a, b):
        raise ValidationError(f"线段退化: {a.tolist()}")
    points = a + np.einsum("jpq,q->jp", replacement_matrices(theta), b - a)
    points[0] = a
    points[-1] = b
    return points


def refine(vertices: np.ndarray, theta: float, workers: Optional[int] = None,
           block_size: int = 65536) -> np.ndarray:
    """对折线的每条线段做一次替换.

    Args:
        vertices: (N+1, 2) 顶点.
        theta: 本级角度.
        workers: 并行线程数.
        block_size: 每块线段数.

    Returns:
        (6N+1, 2) 顶点，原有顶点精确保留.
    """
    _check_theta(theta)
    matrices = replacement_matrices(theta)[:PIECES]
    segments = len(vertices) - 1

    def run(start: int, stop: int) -> np.ndarray:
        a = vertices[start:stop]
        delta = vertices[start + 1 : stop + 1] - a
        block = a[:, None, :] + np.einsum("jpq,nq->njp", matrices, delta)
        block[:, 0, :] = a
        return block.reshape(-1, 2)

    blocks = map_blocks(run, segments, block_size, workers)
    return np.vstack(blocks + [vertices[-1:]])


def refine_segment(a: Sequence[float], b: Sequence[float], thetas: Sequence[float]) -> np.ndarray:
    """把单条线段依次按 thetas 细化多级.

    Returns:
        (6^k+1, 2) 顶点，k = len(thetas).
    """
    vertices = np.array([a, b], dtype=float)
    if np.array_equal(vertices[0], vertices[1]):
        raise ValidationError(f"线段退化: {vertices[0].tolist()}")
    for theta in thetas:
        vertices = refine(vertices, theta, workers=1)
    return vertices


@dataclass
class PolygonStage:
    """第 n 级折线 J_n.

    Attributes:
        stage: 级数 n.
        vertices: (6^n+1, 2) 顶点.
        segment_length: 公共段长 R_n.
    """

    stage: int
    vertices: np.ndarray
    segment_length: float
    thetas: List[float] = field(default_factory=list)

    @property
    def segment_count(self) -> int:
        return len(self.vertices) - 1

    def word_digits(self) -> np.ndarray:
        """各线段的词，形状 (6^n, n)，数字取 1..6."""
        index = np.arange(self.segment_count)
        powers = PIECES ** np.arange(self.stage - 1, -1, -1)
        return (index[:, None] // powers[None, :]) % PIECES + 1

    def segment_word(self, index: int) -> Word:
        return Word.from_index(index, self.stage)

    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    def to_rows(self) -> List[Tuple]:
        """导出行：index, x, y, 以该顶点为起点的线段的词（末顶点为空）."""
        if self.stage:
            words = ["".join(map(str, row)) for row in self.word_digits()]
        else:
            words = [""]
        words.append("")
        return [
            (i, float(x), float(y), words[i])
            for i, (x, y) in enumerate(self.vertices)
        ]


def _check_j0(j0) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(j0[0], dtype=float)
    b = np.asarray(j0[1], dtype=float)
    if a.shape != (2,) or b.shape != (2,):
        raise ValidationError(f"j0 必须是两个平面点: {j0}")
    if np.array_equal(a, b):
        raise ValidationError("j0 退化")
    return a, b


def segment_length(n: int, schedule: AngleSchedule, r0: float = 1.0) -> float:
    """R_n = r0·∏_{j≤n} 1/(2+4cosθ_j)."""
    if n < 0:
        raise ValidationError(f"级数必须非负: {n}")
    thetas = schedule.thetas(1, n)
    return r0 / math.prod(2.0 + 4.0 * math.cos(t) for t in thetas)


def build_stage(
    n: int,
    schedule: AngleSchedule,
    j0=DEFAULT_J0,
    vertex_budget: int = DEFAULT_VERTEX_BUDGET,
    workers: Optional[int] = None,
) -> PolygonStage:
    """构造第 n 级折线.

    Args:
        n: 级数.
        schedule: 角度序列.
        j0: 第 0 级线段的两个端点.
        vertex_budget: 顶点数上限.
        workers: 并行线程数.

    Returns:
        PolygonStage.

    Raises:
        ValidationError: 参数非法.
        BudgetExceededError: 6^n+1 超过顶点预算.
    """
    if n < 0:
        raise ValidationError(f"级数必须非负: {n}")
    a, b = _check_j0(j0)
    if PIECES**n + 1 > vertex_budget:
        raise BudgetExceededError(
            f"第 {n} 级需要 {PIECES**n + 1} 个顶点, 超过预算 {vertex_budget}"
        )
    schedule.warn_angle_condition()
    thetas = schedule.thetas(1, n)

    vertices = np.array([a, b])
    for k, theta in enumerate(thetas, 1):
        vertices = refine(vertices, theta, workers=workers)
        logger.debug(f"第 {k} 级完成: {len(vertices)} 个顶点")

    r0 = float(np.hypot(*(b - a)))
    return PolygonStage(
        stage=n,
        vertices=vertices,
        segment_length=segment_length(n, schedule, r0),
        thetas=thetas,
    )


def locate_segment(w: Word, schedule: AngleSchedule, j0=DEFAULT_J0) -> Tuple[np.ndarray, np.ndarray]:
    """按词逐级定位线段，返回其两个端点."""
    a, b = _check_j0(j0)
    thetas = schedule.thetas(1, len(w))
    for digit, theta in zip(w.digits, thetas):
        points = replace_segment(a, b, theta)
        a, b = points[digit - 1], points[digit]
    return a, b


def locate_word(w: Word, schedule: AngleSchedule, j0=DEFAULT_J0) -> np.ndarray:
    """词 w 所指第 |w| 级线段的左端点.

    Raises:
        ValidationError: 空词或非法数字.
    """
    if not isinstance(w, Word):
        w = Word(tuple(w))
    if len(w) == 0:
        raise ValidationError("词不能为空")
    return locate_segment(w, schedule, j0)[0]


def max_slope(stage: PolygonStage, j0=DEFAULT_J0) -> float:
    """各线段相对 j0 方向的最大斜率绝对值."""
    a, b = _check_j0(j0)
    axis = (b - a) / np.hypot(*(b - a))
    delta = np.diff(stage.vertices, axis=0)
    along = delta @ axis
    across = delta[:, 1] * axis[0] - delta[:, 0] * axis[1]
    if np.any(along <= 0):
        return math.inf
    return float(np.max(np.abs(across) / along))


def lipschitz_bound(
    schedule: AngleSchedule,
    stages: int,
    verify_stage: Optional[int] = None,
    j0=DEFAULT_J0,
) -> float:
    """极限曲线作为图的 Lipschitz 上界 tan(Σθ_n).

    Args:
        schedule: 角度序列.
        stages: 直接求和的项数，其余用解析尾部上界.
        verify_stage: 若给出，构造该级折线并确认其最大斜率不超过上界.
        j0: 第 0 级线段.

    Returns:
        上界.

    Raises:
        ValidationError: Σθ ≥ π/2，或实测斜率超过上界.
    """
    total = schedule.sum_bound(stages)
    if not total < math.pi / 2:
        raise ValidationError(f"Σθ = {total} 不小于 π/2, 没有有限的 Lipschitz 上界")
    bound = math.tan(total)
    if verify_stage is not None:
        observed = max_slope(build_stage(verify_stage, schedule, j0), j0)
        logger.info(f"第 {verify_stage} 级实测最大斜率 {observed:.6g}, 上界 {bound:.6g}")
        if observed > bound * (1.0 + 1e-12):
            raise ValidationError(f"实测斜率 {observed} 超过上界 {bound}")
    return bound


@dataclass
class HullReport:
    """凸包包含检查结果."""

    stage: int
    extra_stages: int
    segments_checked: int
    max_excess: float

    @property
    def contained(self) -> bool:
        return self.max_excess <= 1e-12


def check_hull_containment(
    schedule: AngleSchedule,
    n: int,
    extra_stages: int,
    j0=DEFAULT_J0,
    max_segments: int = 216,
    seed: int = 0,
) -> HullReport:
    """检查细化第 n 级线段得到的第 n+k 级点是否落在其第 n+1 级替换的凸包内.

    Args:
        schedule: 角度序列.
        n: 父线段所在级数.
        extra_stages: 最大细化级数 k.
        j0: 第 0 级线段.
        max_segments: 6^n 超过该值时随机抽取这么多条父线段.
        seed: 抽样种子.

    Returns:
        HullReport，max_excess 为越出凸包的最大距离除以 R_n.
    """
    if extra_stages < 1:
        raise ValidationError(f"extra_stages 必须 ≥ 1: {extra_stages}")
    thetas = schedule.thetas(n + 1, extra_stages)
    if thetas[0] == 0:
        raise ValidationError("θ_{n+1} = 0 时替换折线退化, 无凸包")

    total = PIECES**n
    if total <= max_segments:
        indices = range(total)
    else:
        indices = np.random.default_rng(seed).integers(0, total, size=max_segments)

    r_n = segment_length(n, schedule, float(np.hypot(*np.subtract(j0[1], j0[0]))))
    max_excess = -math.inf
    count = 0
    for index in indices:
        a, b = locate_segment(Word.from_index(int(index), n), schedule, j0) if n else _check_j0(j0)
        hull = ConvexHull(replace_segment(a, b, thetas[0]))
        points = refine_segment(a, b, thetas)
        excess = points @ hull.equations[:, :2].T + hull.equations[:, 2]
        max_excess = max(max_excess, float(excess.max()) / r_n)
        count += 1

    report = HullReport(stage=n, extra_stages=extra_stages, segments_checked=count, max_excess=max_excess)
    logger.info(f"凸包检查 n={n}, k={extra_stages}: 最大越界 {max_excess:.3e}")
    return report
