import numpy as np
import pytest

from src.fusion.swarm import SWARM_DIMS, pst_generate


class TestSwarmTemplate:
    def test_shape_and_range(self):
        """测试模板形状与取值范围"""
        pst = pst_generate(128, 0)
        assert len(pst) == 128
        assert pst.particles.shape == (128, SWARM_DIMS)
        assert np.all(np.abs(pst.particles) <= 1.0)

    def test_first_row_zero(self):
        """测试第 0 行为零向量"""
        assert np.array_equal(pst_generate(16, 3).particles[0], np.zeros(SWARM_DIMS))

    def test_deterministic(self):
        """测试相同参数得到按位相同的模板"""
        assert np.array_equal(pst_generate(64, 5).particles, pst_generate(64, 5).particles)
        assert not np.array_equal(pst_generate(64, 5).particles, pst_generate(64, 6).particles)

    def test_read_only(self):
        """测试模板只读"""
        with pytest.raises(ValueError):
            pst_generate(8, 0).particles[1, 0] = 0.0

    def test_too_small(self):
        """测试粒子数小于 2 时报错"""
        with pytest.raises(ValueError):
            pst_generate(1, 0)

    def test_zero_mean_unit_cube(self):
        """测试大模板各维均值趋于 0、方差趋于均匀分布的 1/3"""
        particles = pst_generate(100_000, 7).particles
        assert np.all(np.abs(particles.mean(axis=0)) < 0.02)
        assert np.allclose(particles.var(axis=0), 1.0 / 3.0, atol=0.01)
