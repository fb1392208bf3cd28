"""Heisenberg 群运算测试."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.errors import ValidationError
from src.heisenberg import (
    IDENTITY,
    HPoint,
    as_points,
    chord_arrays,
    chord_rows,
    dilate,
    dilate_array,
    dist,
    group_mul,
    inverse,
    koranyi_norm,
    nh,
    norm_array,
    pairwise_distances,
    translate_array,
)
from src.kernels import AlphaKernel, BKernel

coordinates = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
points = st.builds(HPoint, coordinates, coordinates, coordinates)
scales = st.floats(min_value=0.01, max_value=100.0)


class TestHPoint:
    """测试 HPoint."""

    def test_rejects_non_finite(self):
        """测试非有限坐标被拒绝."""
        with pytest.raises(ValidationError):
            HPoint(math.nan, 0.0, 0.0)
        with pytest.raises(ValidationError):
            HPoint(0.0, 0.0, math.inf)

    def test_array_conversion(self):
        """测试与数组互相转换."""
        p = HPoint(1.0, -2.0, 3.5)
        assert HPoint.from_array(p.as_array()) == p

    def test_mul_operator(self):
        """测试 * 运算符等同于群乘法."""
        p, q = HPoint(1.0, 2.0, 3.0), HPoint(-1.0, 0.5, 2.0)
        assert p * q == group_mul(p, q)


class TestGroupLaw:
    """测试群律."""

    def test_known_product(self):
        """测试一个手算的乘积."""
        p = group_mul(HPoint(1.0, 0.0, 0.0), HPoint(0.0, 1.0, 0.0))
        assert p == HPoint(1.0, 1.0, 0.5)

    def test_non_commutative(self):
        """测试群不交换."""
        a, b = HPoint(1.0, 0.0, 0.0), HPoint(0.0, 1.0, 0.0)
        assert group_mul(a, b).z == -group_mul(b, a).z

    @given(points)
    @settings(max_examples=100)
    def test_identity_and_inverse(self, p):
        """测试单位元与逆元."""
        assert group_mul(p, IDENTITY) == p
        assert group_mul(IDENTITY, p) == p
        assert group_mul(p, inverse(p)) == IDENTITY

    @given(points, points, points)
    @settings(max_examples=100)
    def test_associative(self, p, q, r):
        """测试结合律（浮点容差内）."""
        left = group_mul(group_mul(p, q), r).as_array()
        right = group_mul(p, group_mul(q, r)).as_array()
        assert np.allclose(left, right, rtol=1e-12, atol=1e-9)


class TestMetric:
    """测试 Koranyi 范数与距离."""

    def test_norm_of_axes(self):
        """测试坐标轴上的范数."""
        assert koranyi_norm(HPoint(3.0, 4.0, 0.0)) == pytest.approx(5.0)
        assert koranyi_norm(HPoint(0.0, 0.0, 16.0)) == pytest.approx(4.0)

    def test_norm_does_not_overflow(self):
        """测试大坐标时不溢出."""
        assert math.isfinite(koranyi_norm(HPoint(1e100, 1e100, 1e200)))

    def test_nh(self):
        """测试非水平量."""
        assert nh(HPoint(5.0, 5.0, -9.0)) == 3.0

    @given(points, points)
    @settings(max_examples=100)
    def test_symmetric(self, p, q):
        """测试对称性."""
        assert dist(p, q) == pytest.approx(dist(q, p), rel=1e-12, abs=1e-12)

    @given(points, points, points)
    @settings(max_examples=200)
    def test_triangle_inequality(self, p, q, r):
        """测试三角不等式."""
        assert dist(p, r) <= dist(p, q) + dist(q, r) + 1e-6

    @given(points, points, points)
    @settings(max_examples=100)
    def test_left_invariant(self, g, p, q):
        """测试左不变性."""
        assume(dist(p, q) > 1e-2)
        assert dist(group_mul(g, p), group_mul(g, q)) == pytest.approx(dist(p, q), rel=1e-6)

    @given(points, points, scales)
    @settings(max_examples=100)
    def test_homogeneous(self, p, q, r):
        """测试伸缩下 d 按 r 缩放."""
        assume(dist(p, q) > 1e-2)
        assert dist(dilate(r, p), dilate(r, q)) == pytest.approx(r * dist(p, q), rel=1e-6)


class TestDilation:
    """测试伸缩."""

    def test_dilate_coordinates(self):
        """测试伸缩坐标."""
        assert dilate(2.0, HPoint(1.0, -1.0, 3.0)) == HPoint(2.0, -2.0, 12.0)

    def test_dilate_rejects_non_positive(self):
        """测试非正伸缩因子."""
        with pytest.raises(ValidationError):
            dilate(0.0, HPoint(1.0, 0.0, 0.0))
        with pytest.raises(ValidationError):
            dilate_array(-1.0, np.zeros((2, 3)))

    @given(points, points, scales)
    @settings(max_examples=50)
    def test_dilation_is_automorphism(self, p, q, r):
        """测试伸缩是群自同构."""
        left = dilate(r, group_mul(p, q)).as_array()
        right = group_mul(dilate(r, p), dilate(r, q)).as_array()
        assert np.allclose(left, right, rtol=1e-12, atol=1e-8)


class TestArrays:
    """测试向量化版本."""

    @pytest.fixture
    def cloud(self):
        """随机点云."""
        rng = np.random.default_rng(3)
        return rng.uniform(-2.0, 2.0, size=(12, 3))

    def test_as_points(self):
        """测试 HPoint 列表与形状检查."""
        array = as_points([HPoint(1.0, 2.0, 3.0), HPoint(0.0, 0.0, 0.0)])
        assert array.shape == (2, 3)
        with pytest.raises(ValidationError):
            as_points(np.zeros((3, 2)))
        with pytest.raises(ValidationError):
            as_points([[0.0, 0.0, math.nan]])

    def test_pairwise_matches_scalar(self, cloud):
        """测试成对距离与标量版本一致."""
        d = pairwise_distances(cloud, cloud)
        for i in range(len(cloud)):
            for j in range(len(cloud)):
                p, q = HPoint.from_array(cloud[i]), HPoint.from_array(cloud[j])
                assert d[i, j] == pytest.approx(dist(p, q), rel=1e-12, abs=1e-15)

    def test_chords_antisymmetric(self, cloud):
        """测试成对弦精确反对称，对角为零."""
        dx, dy, dz = chord_arrays(cloud, cloud)
        assert np.array_equal(dx, -dx.T)
        assert np.array_equal(dy, -dy.T)
        assert np.array_equal(dz, -dz.T)
        assert not np.any(np.diag(dz))

    def test_chord_rows_matches_diagonal(self, cloud):
        """测试逐行弦等于成对弦的对角线."""
        shifted = np.roll(cloud, 1, axis=0)
        rows = chord_rows(cloud, shifted)
        pairs = chord_arrays(cloud, shifted)
        for row, pair in zip(rows, pairs):
            assert np.array_equal(row, np.diag(pair))

    def test_translate_preserves_distances(self, cloud):
        """测试左平移保持成对距离."""
        g = HPoint(0.7, -1.3, 2.2)
        before = pairwise_distances(cloud, cloud)
        after = pairwise_distances(translate_array(g, cloud), translate_array(g, cloud))
        assert np.allclose(before, after, rtol=1e-10, atol=1e-12)

    def test_dilate_array_scales_distances(self, cloud):
        """测试点云伸缩."""
        scaled = dilate_array(0.5, cloud)
        assert np.allclose(pairwise_distances(scaled, scaled), 0.5 * pairwise_distances(cloud, cloud))


class TestSeededCloud:
    """在 10⁵ 对固定种子随机点上检查度量性质."""

    @pytest.fixture(scope="class")
    def pairs(self):
        """10⁵ 对点 (p_i, q_i)，坐标取在 2⁻²⁰ 网格上."""
        rng = np.random.default_rng(20240601)
        p, q = rng.integers(-(2**20), 2**20, size=(2, 100_000, 3)) / 2.0**20
        return p, q

    @staticmethod
    def _norms(left, right):
        return norm_array(*chord_rows(left, right))

    @staticmethod
    def _max_relative_error(actual, expected):
        return float(np.max(np.abs(actual - expected) / np.abs(expected)))

    def test_left_invariant(self, pairs):
        """测试左平移后距离的最大相对误差 ≤ 1e-12."""
        p, q = pairs
        # 二进网格与二进平移下群运算无舍入
        g = HPoint(0.5, -0.25, 1.0)
        before = self._norms(p, q)
        after = self._norms(translate_array(g, p), translate_array(g, q))
        assert self._max_relative_error(after, before) <= 1e-12

    def test_chord_rows_match_pairwise(self, pairs):
        """测试逐行距离与成对距离矩阵的对角线一致."""
        p, q = pairs
        block = slice(0, 500)
        assert np.array_equal(self._norms(p[block], q[block]), np.diag(pairwise_distances(p[block], q[block])))

    @pytest.mark.parametrize("r", [0.37, 5.0])
    def test_norm_and_nh_homogeneous(self, pairs, r):
        """测试 ‖δ_r p‖ = r‖p‖ 与 NH(δ_r p) = r·NH(p)."""
        p, _ = pairs
        scaled = dilate_array(r, p)
        assert self._max_relative_error(norm_array(*scaled.T), r * norm_array(*p.T)) <= 1e-12
        vertical = p[:, 2] != 0
        nh_scaled = np.sqrt(np.abs(scaled[vertical, 2]))
        assert self._max_relative_error(nh_scaled, r * np.sqrt(np.abs(p[vertical, 2]))) <= 1e-12

    @pytest.mark.parametrize("kernel", [AlphaKernel(4.0), AlphaKernel(1.0), BKernel()], ids=["alpha4", "alpha1", "b"])
    def test_kernel_homogeneous(self, pairs, kernel):
        """测试核为 −1 次齐次: K(δ_r p) = K(p)/r."""
        p, _ = pairs
        r = 0.37
        base = kernel.evaluate_array(*p.T)
        scaled = kernel.evaluate_array(*dilate_array(r, p).T)
        keep = base > 0
        assert self._max_relative_error(scaled[keep], base[keep] / r) <= 1e-12
