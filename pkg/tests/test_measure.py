"""离散测度与 Ahlfors 审计测试."""

import math

import numpy as np
import pytest

from src.errors import ValidationError
from src.heisenberg import HPoint
from src.koch import PowerLaw, build_stage
from src.lifts import cantor_build, horizontal_lift
from src.measure import DiscreteMeasure, ahlfors_check, from_cantor, from_polyline


@pytest.fixture
def segment_measure():
    """x 轴上单位线段，100 个原子，间距 0.01."""
    return from_polyline(horizontal_lift([(0.0, 0.0), (1.0, 0.0)]), 100)


class TestDiscreteMeasure:
    """测试 DiscreteMeasure."""

    def test_diameter_computed(self):
        """测试构造时计算直径."""
        m = DiscreteMeasure([[0.0, 0.0, 0.0], [0.0, 0.0, 4.0]], [1.0, 1.0])
        assert m.diameter == pytest.approx(2.0)
        assert m.size == 2
        assert m.total_mass() == 2.0

    def test_diameter_verified(self):
        """测试缓存直径不符时报错."""
        with pytest.raises(ValidationError):
            DiscreteMeasure([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [1.0, 1.0], diameter=2.0)

    @pytest.mark.parametrize("weights", [[1.0], [1.0, 0.0], [1.0, -1.0], [1.0, math.nan]])
    def test_invalid_weights(self, weights):
        """测试权重个数与符号."""
        with pytest.raises(ValidationError):
            DiscreteMeasure([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], weights)

    def test_single_atom(self):
        """测试单原子测度直径为 0."""
        m = DiscreteMeasure([[1.0, 2.0, 3.0]], [0.5])
        assert m.diameter == 0.0
        assert m.point_spacing() == 0.0

    def test_scaled(self, segment_measure):
        """测试权重缩放."""
        doubled = segment_measure.scaled(2.0)
        assert doubled.total_mass() == pytest.approx(2.0)
        assert doubled.diameter == segment_measure.diameter
        with pytest.raises(ValidationError):
            segment_measure.scaled(0.0)

    def test_translate_preserves_geometry(self, segment_measure):
        """测试左平移保持直径与点距."""
        moved = segment_measure.translate(HPoint(3.0, -1.0, 2.0))
        assert moved.diameter == pytest.approx(segment_measure.diameter)
        assert moved.point_spacing() == pytest.approx(segment_measure.point_spacing())

    def test_restrict(self, segment_measure):
        """测试限制到球."""
        center = segment_measure.points[50]
        ball = segment_measure.restrict(center, 0.025)
        assert ball.size == 5
        assert ball.total_mass() == pytest.approx(0.05)
        with pytest.raises(ValidationError):
            segment_measure.restrict(HPoint(0.0, 0.0, 100.0), 1.0)

    def test_distances_from_accepts_points(self, segment_measure):
        """测试距离既接受 HPoint 也接受数组."""
        d1 = segment_measure.distances_from(HPoint(0.0, 0.0, 0.0))
        d2 = segment_measure.distances_from(np.zeros(3))
        assert np.array_equal(d1, d2)
        assert d1[0] == pytest.approx(0.005)

    def test_parallel_diameter(self):
        """测试分块计算直径与线程数无关."""
        rng = np.random.default_rng(0)
        points = rng.uniform(-1.0, 1.0, size=(1500, 3))
        weights = np.ones(1500)
        serial = DiscreteMeasure(points, weights, workers=1)
        parallel = DiscreteMeasure(points, weights, workers=4)
        assert serial.diameter == parallel.diameter


class TestBuilders:
    """测试由提升曲线与 Cantor 集构造测度."""

    def test_segment_atoms(self, segment_measure):
        """测试原子位于小段中点，权重为小段长度."""
        assert segment_measure.size == 100
        assert segment_measure.points[0] == pytest.approx([0.005, 0.0, 0.0])
        assert np.allclose(segment_measure.weights, 0.01)
        assert segment_measure.total_mass() == pytest.approx(1.0)
        assert segment_measure.point_spacing() == pytest.approx(0.01)

    def test_koch_mass_is_length(self):
        """测试 Koch 提升上的总质量等于折线长度."""
        stage = build_stage(2, PowerLaw(0.2, 2.0))
        m = from_polyline(horizontal_lift(stage.vertices), 3)
        assert m.size == 108
        assert m.total_mass() == pytest.approx(36 * stage.segment_length, rel=1e-12)

    def test_cantor_mass(self):
        """测试 Cantor 测度总质量为 1."""
        m = from_cantor(cantor_build(5))
        assert m.size == 32
        assert m.total_mass() == 1.0
        assert m.label == "cantor[5]"

    def test_invalid_subdivisions(self):
        """测试细分数."""
        with pytest.raises(ValidationError):
            from_polyline(horizontal_lift([(0.0, 0.0), (1.0, 0.0)]), 0)


class TestAhlfors:
    """测试 Ahlfors 正则性审计."""

    def test_segment_ratios(self, segment_measure):
        """测试线段上的比值落在 [1, 2] 内."""
        radii = [(m + 0.5) * 0.01 for m in (5, 10, 25)]
        report = ahlfors_check(segment_measure, 200, radii, 0.045)
        assert len(report.centers) == 100
        assert len(report.rows) == 300
        assert report.min_ratio >= 1.0 - 1e-12
        assert report.max_ratio <= 2.0 + 1e-12
        assert report.max_ratio == pytest.approx(2.0)
        assert report.spread <= 2.0 + 1e-12

    def test_cantor_ratios(self):
        """测试 Cantor 测度在二进半径上的比值有界."""
        m = from_cantor(cantor_build(10))
        radii = [2.0**-j for j in (3, 5, 7)]
        report = ahlfors_check(m, 64, radii, 2.0**-7, seed=1)
        assert len(report.centers) == 64
        assert 0.5 <= report.min_ratio <= report.max_ratio <= 2.0

    def test_sampled_centers_reproducible(self, segment_measure):
        """测试中心抽样可复现且与线程数无关."""
        first = ahlfors_check(segment_measure, 10, [0.105], 0.045, seed=7, workers=1)
        second = ahlfors_check(segment_measure, 10, [0.105], 0.045, seed=7, workers=3)
        assert first.centers == second.centers
        assert first.rows == second.rows

    def test_floor_below_spacing(self, segment_measure):
        """测试半径下限低于 4 倍点距时拒绝."""
        with pytest.raises(ValidationError):
            ahlfors_check(segment_measure, 10, [0.05], 0.03)

    @pytest.mark.parametrize("radii", [[0.02], [2.0], []])
    def test_radius_out_of_range(self, segment_measure, radii):
        """测试半径越界或为空."""
        with pytest.raises(ValidationError):
            ahlfors_check(segment_measure, 10, radii, 0.045)

    def test_invalid_center_sample(self, segment_measure):
        """测试中心个数."""
        with pytest.raises(ValidationError):
            ahlfors_check(segment_measure, 0, [0.1], 0.045)


class TestKochRegularity:
    """测试 Koch 提升上的 Ahlfors 比值."""

    @staticmethod
    def _koch(stages):
        return from_polyline(horizontal_lift(build_stage(stages, PowerLaw(0.3, 2.0)).vertices), 1)

    @pytest.mark.slow
    def test_ratios_bounded(self):
        """测试比值落在 [1/20, 20] 内."""
        report = ahlfors_check(self._koch(4), 64, [0.02, 0.05, 0.1, 0.2, 0.4], 0.02)
        assert 1 / 20 <= report.min_ratio <= report.max_ratio <= 20
        assert report.spread <= 20

    @pytest.mark.slow
    def test_stable_one_stage_deeper(self):
        """测试加深一级后最大/最小比值的变化不超过 25%."""
        radii = [0.1, 0.2, 0.4]
        coarse = ahlfors_check(self._koch(3), 10**6, radii, 0.1)
        fine = ahlfors_check(self._koch(4), 10**6, radii, 0.1)
        assert fine.spread == pytest.approx(coarse.spread, rel=0.25)
