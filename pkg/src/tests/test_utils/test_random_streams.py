import numpy as np

from src.utils.random_streams import philox_generator, stream_key, unit_cube_samples


class TestPhiloxStreams:
    def test_same_key_same_sequence(self):
        """测试相同种子与子流产生相同序列"""
        a = philox_generator(7, 3, 1).uniform(size=16)
        b = philox_generator(7, 3, 1).uniform(size=16)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        """测试不同子流与不同种子互不相同"""
        base = philox_generator(7, 3).uniform(size=8)
        assert not np.array_equal(base, philox_generator(7, 4).uniform(size=8))
        assert not np.array_equal(base, philox_generator(8, 3).uniform(size=8))

    def test_key_order_matters(self):
        """测试子流编号的顺序参与密钥计算"""
        assert stream_key(0, 1, 2) != stream_key(0, 2, 1)
        assert stream_key(0) != stream_key(0, 0)


class TestUnitCubeSamples:
    def test_shape_and_range(self):
        """测试采样模板的形状与取值范围"""
        samples = unit_cube_samples(512, 0)
        assert samples.shape == (512, 3)
        assert samples.min() >= -0.5 and samples.max() < 0.5

    def test_read_only_and_cached(self):
        """测试模板只读且被缓存"""
        samples = unit_cube_samples(256, 1)
        assert not samples.flags.writeable
        assert unit_cube_samples(256, 1) is samples
