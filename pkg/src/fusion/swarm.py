from dataclasses import dataclass

import numpy as np

from ..utils.random_streams import philox_generator

# 粒子维度：δx, δy, δz, δl, δw, δh
SWARM_DIMS = 6
_PST_STREAM = 0x9573


@dataclass(frozen=True, eq=False)
class SwarmTemplate:
    """
    预采样粒子模板 PST

    Note:
        particles 为 (N_pst, 6) 只读数组，每个分量位于 [-1, 1]；第 0 行恒为零向量，
        保证当前状态始终是候选之一
    """

    particles: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.particles)


def pst_generate(n_pst: int, seed: int) -> SwarmTemplate:
    """
    生成粒子模板

    Args:
        n_pst: 粒子数，至少为 2
        seed: 随机种子

    Returns:
        SwarmTemplate: 相同 (n_pst, seed) 总是得到按位相同的模板

    Raises:
        ValueError: n_pst 小于 2
    """
    if n_pst < 2:
        raise ValueError(f"粒子数至少为 2，实际为 {n_pst}")
    particles = np.zeros((n_pst, SWARM_DIMS), dtype=np.float64)
    particles[1:] = philox_generator(seed, _PST_STREAM, n_pst).uniform(-1.0, 1.0, size=(n_pst - 1, SWARM_DIMS))
    particles.setflags(write=False)
    return SwarmTemplate(particles, seed)
