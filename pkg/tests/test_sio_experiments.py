"""发散扫描、逐级二次型与 Cantor 行和实验测试."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.errors import BudgetExceededError, ValidationError
from src.kernels import AlphaKernel, BKernel
from src.koch import Explicit, PowerLaw
from src.lifts import cantor_build, cantor_chords, log_curve_interval, log_curve_point
from src.sio import cantor_row_sup_sweep, koch_stagewise_form, l1_divergence_scan


def _direct_integral(s: float, n: int) -> float:
    """在原尺度上用自适应积分计算 ∫_{I_n} K₄(γ(s)⁻¹γ(t)) dt（对 u = log t 换元）."""
    kernel = AlphaKernel(4.0)
    base = log_curve_point(s)
    low, high = log_curve_interval(n)

    def integrand(u: float) -> float:
        t = math.exp(u)
        return kernel.pair_eval(base, log_curve_point(t)) * t

    value, _ = quad(integrand, math.log(low), math.log(high), epsabs=0.0, epsrel=1e-12, limit=200)
    return value


class TestL1Scan:
    """测试对数曲线上的 L¹ 扫描."""

    @pytest.mark.parametrize("n", [0, 3])
    def test_matches_adaptive_quadrature(self, n):
        """测试与原尺度自适应积分一致."""
        result = l1_divergence_scan(1.0, (n, n))
        assert result.values[0] == pytest.approx(_direct_integral(1.0, n), rel=1e-8)

    def test_values_bounded_below(self):
        """测试各区间贡献有正下界，部分和线性增长."""
        result = l1_divergence_scan(1.0, (3, 20))
        values = np.array(result.values)
        assert len(result.rows) == 18
        assert values.min() > 0
        # 伸缩后基点趋于原点，各区间贡献趋于同一常数
        assert values.max() / values.min() == pytest.approx(1.0, abs=1e-6)
        assert result.partial_sums[-1] == pytest.approx(18 * values[0], rel=1e-6)
        assert all(b > a for a, b in zip(result.partial_sums, result.partial_sums[1:]))

    def test_comparator(self):
        """测试比较量为伸缩后的区间长度 e^{3π/4} − e^{π/2}."""
        row = l1_divergence_scan(1.0, (5, 5)).rows[0]
        low, high = log_curve_interval(5)
        assert row.comparator == pytest.approx(math.exp(3 * math.pi / 4) - math.exp(math.pi / 2))
        assert row.comparator == pytest.approx((high - low) * math.exp(-10 * math.pi), rel=1e-9)
        assert row.as_tuple()[0] == 5

    def test_far_intervals_stay_finite(self):
        """测试接近双精度上限的区间仍为有限值."""
        result = l1_divergence_scan(2.0, (110, 112))
        assert all(math.isfinite(v) and v > 0 for v in result.values)

    def test_quadrature_converged(self):
        """测试节点数加倍后结果不变."""
        coarse = l1_divergence_scan(1.0, (4, 4), quadrature_points=16).values[0]
        fine = l1_divergence_scan(1.0, (4, 4), quadrature_points=64).values[0]
        assert coarse == pytest.approx(fine, rel=1e-10)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"s": 0.0},
            {"n_range": (5, 4)},
            {"n_range": (0, 113)},
            {"quadrature_points": 8},
            {"panels": 0},
        ],
    )
    def test_invalid(self, kwargs):
        """测试非法参数."""
        with pytest.raises(ValidationError):
            l1_divergence_scan(**kwargs)


class TestStagewise:
    """测试 Koch 提升上的逐级二次型."""

    @pytest.fixture
    def schedule(self):
        """θ_n = 0.2/n²."""
        return PowerLaw(0.2, 2.0)

    @pytest.mark.slow
    def test_tracks_comparator(self, schedule):
        """测试各级贡献与 θ_n^α 同阶，部分和单调."""
        result = koch_stagewise_form(schedule, 0.5, stages=4)
        assert result.exhaustive == [True] * 4
        values = np.array(result.values)
        ratios = values / np.array([row.comparator for row in result.rows])
        assert np.all(values > 0)
        assert ratios.max() / ratios.min() < 3.0
        assert all(b > a for a, b in zip(result.partial_sums, result.partial_sums[1:]))
        assert result.rows[0].comparator == pytest.approx(math.sqrt(0.2))

    @pytest.mark.slow
    def test_partial_sums_keep_growing(self, schedule):
        """测试第 2 至 8 级贡献保持正下界，S₈/S₄ ≥ 1.2."""
        result = koch_stagewise_form(schedule, 0.5, stages=8)
        values = np.array(result.values)
        ratios = values / np.array([row.comparator for row in result.rows])
        # 下界常数由穷举的前 4 级确定
        kappa = 0.5 * ratios[:4].min()
        assert np.all(ratios[1:] >= kappa)
        assert result.partial_sums[7] / result.partial_sums[3] >= 1.2

    @pytest.mark.slow
    def test_sampled_stage(self, schedule):
        """测试前缀过多时改为抽样并可复现."""
        first = koch_stagewise_form(schedule, 0.5, stages=5, pair_samples=10, seed=2)
        second = koch_stagewise_form(schedule, 0.5, stages=5, pair_samples=10, seed=2)
        assert first.exhaustive == [True, True, True, True, False]
        assert first.values == second.values

    def test_independent_of_workers(self, schedule):
        """测试结果与线程数无关."""
        serial = koch_stagewise_form(schedule, 0.5, stages=3, workers=1)
        parallel = koch_stagewise_form(schedule, 0.5, stages=3, workers=4)
        assert serial.values == parallel.values

    def test_requires_angle_condition(self):
        """测试 Σθ ≥ 1/2 时拒绝."""
        with pytest.raises(ValidationError):
            koch_stagewise_form(PowerLaw(0.31, 2.0), 0.5, stages=2)

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_invalid_alpha(self, schedule, alpha):
        """测试 α 越界."""
        with pytest.raises(ValidationError):
            koch_stagewise_form(schedule, alpha, stages=2)

    def test_schedule_too_short(self):
        """测试显式序列级数不足."""
        with pytest.raises(ValidationError):
            koch_stagewise_form(Explicit((0.1, 0.05, 0.02)), 0.5, stages=2)


class TestCantorRowSup:
    """测试 Cantor 测度上的最大行和."""

    def test_b_kernel_bounded(self):
        """测试 K_b 在 (d, 0, d) 弦上不超过 1，行和有界."""
        rows = cantor_row_sup_sweep(range(3, 8), BKernel())
        assert [r[0] for r in rows] == [3, 4, 5, 6, 7]
        assert math.isnan(rows[0][2])
        assert all(0 < r[1] < 1 for r in rows)

    @pytest.mark.slow
    def test_b_kernel_converges_through_depth_twelve(self):
        """测试深度 6 至 12 的行和不超过深度 8 的两倍，且 k ≥ 9 的增量严格递减."""
        rows = cantor_row_sup_sweep(range(6, 13), BKernel())
        sups = {depth: value for depth, value, _ in rows}
        increments = [inc for depth, _, inc in rows if depth >= 9]
        assert max(sups.values()) <= 2 * sups[8]
        assert all(b < a for a, b in zip(increments, increments[1:]))

    def test_b_kernel_positive_off_diagonal(self):
        """测试 Cantor 集上所有非零弦处 K_b 严格为正."""
        dx, dy, dz = cantor_chords(cantor_build(6))
        off = ~np.eye(len(dx), dtype=bool)
        assert np.all(BKernel().evaluate_array(dx[off], dy[off], dz[off]) > 0)

    def test_alpha_kernel_grows_linearly(self):
        """测试 K₄ 的行和每加深一级增加一个有界常数."""
        rows = cantor_row_sup_sweep(range(3, 8), AlphaKernel(4.0))
        increments = [r[2] for r in rows[1:]]
        assert all(0.3 < inc < 1.0 for inc in increments)

    def test_budget(self):
        """测试深度超出预算."""
        with pytest.raises(BudgetExceededError):
            cantor_row_sup_sweep([5], budget=16)
