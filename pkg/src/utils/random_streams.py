from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_key(seed: int, *stream: int) -> int:
    """把 (seed, stream...) 组合为 128 位 Philox 密钥"""
    word = 0
    for part in stream:
        word = (word * 1_000_003 + int(part) + 1) & _MASK64
    return (word << 64) | (int(seed) & _MASK64)


def philox_generator(seed: int, *stream: int) -> np.random.Generator:
    """
    基于计数器的确定性随机数生成器

    Args:
        seed: 全局种子
        stream: 子流编号（如帧号、物体编号），不同子流互不相关

    Returns:
        np.random.Generator: 相同参数总是产生相同序列
    """
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *stream)))


@lru_cache(maxsize=32)
def unit_cube_samples(n_samples: int, seed: int) -> np.ndarray:
    """[-0.5, 0.5)^3 内的均匀采样点模板，只读并缓存"""
    samples = philox_generator(seed, 0x5A3D).uniform(-0.5, 0.5, size=(n_samples, 3))
    samples.setflags(write=False)
    return samples
