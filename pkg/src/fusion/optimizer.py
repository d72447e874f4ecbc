"""粒子滤波随机优化（PFO）与各融合策略"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .objective import ViewSet, batch_fitness, build_view_set
from .swarm import SwarmTemplate
from ..config.settings import FusionConfig
from ..models.box import OrientedBox3D, quaternion_to_rotation
from ..models.global_object import CandidateObservation, GlobalObject

logger = logging.getLogger(__name__)

# 优势集收缩系数的下限与上限
_CONTRACTION_BOUNDS = (0.1, 1.0)

FusionInit = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class FusionResult:
    """一次优化的结果，fitness 不低于 initial_fitness"""

    p_star: np.ndarray
    s_star: np.ndarray
    fitness: float
    iterations: int
    converged: bool
    initial_fitness: float


def init_from_candidates(psi: Sequence[CandidateObservation]) -> FusionInit:
    """
    由候选求初始状态

    Returns:
        FusionInit: (候选中心均值, 候选尺寸均值, 置信度最高候选的 wxyz 旋转)
    """
    centers = np.array([c.box_world.center for c in psi])
    sizes = np.array([c.box_world.size for c in psi])
    best = psi[0]
    for candidate in psi[1:]:
        if candidate.score > best.score:
            best = candidate
    return centers.mean(axis=0), sizes.mean(axis=0), np.array(best.box_world.rotation)


def _evaluate(views: ViewSet, state: np.ndarray, rotation: np.ndarray, min_size: float) -> float:
    return float(batch_fitness(views, state[None, :3], state[None, 3:], rotation, min_size)[0])


def pfo_optimize(init: FusionInit, psi: Sequence[CandidateObservation], pst: SwarmTemplate,
                 config: FusionConfig) -> FusionResult:
    """
    以预采样粒子模板迭代搜索 (p, s)，旋转保持不变

    Args:
        init: 初始状态 (p', s', wxyz 旋转)
        psi: 候选列表，至少一个
        pst: 粒子模板
        config: 融合参数

    Returns:
        FusionResult: 访问过的最优状态

    Note:
        每轮以 q + σ⊙r 评估模板中全部粒子；适应度高于当前状态的粒子构成优势集。
        优势集非空时移动到其中最优者，σ 按优势集各维 max|r| 收缩（夹在 [0.1, 1]）；
        为空时 σ 乘以 shrink。达到 k_max、max(σ) < min_sigma 或最近 3 轮改进小于
        epsilon_f 时停止。
    """
    center0, size0, quat = init
    rotation = quaternion_to_rotation(np.asarray(quat, dtype=np.float64)).as_matrix()
    views = build_view_set(psi)
    mean_extent = float(np.mean([c.box_world.size for c in psi]))
    sigma = np.concatenate([np.full(3, config.sigma_init_pos * mean_extent),
                            config.sigma_init_size * np.asarray(size0, dtype=np.float64)])
    state = np.concatenate([center0, size0]).astype(np.float64)
    current = _evaluate(views, state, rotation, config.min_size)
    initial = current
    history = [current]
    iterations, converged = 0, False

    for k in range(1, config.k_max + 1):
        iterations = k
        states = state + sigma * pst.particles
        fitness = batch_fitness(views, states[:, :3], states[:, 3:], rotation, config.min_size, floor=current)
        superior = fitness > current
        superior[0] = False
        if superior.any():
            best = int(np.argmax(np.where(superior, fitness, -np.inf)))
            new_state, new_fitness = states[best], float(fitness[best])
            if config.selection == "softmax":
                logits = (fitness[superior] - new_fitness) / config.xi
                weights = np.exp(logits) / np.exp(logits).sum()
                blended = weights @ states[superior]
                blended_fitness = _evaluate(views, blended, rotation, config.min_size)
                if blended_fitness > new_fitness:
                    new_state, new_fitness = blended, blended_fitness
            contraction = np.clip(np.abs(pst.particles[superior]).max(axis=0), *_CONTRACTION_BOUNDS)
            sigma = sigma * contraction
            state, current = new_state, new_fitness
        else:
            sigma = sigma * config.shrink
        history.append(current)
        if sigma.max() < config.min_sigma:
            converged = True
            break
        if k >= 3 and history[-1] - history[-4] < config.epsilon_f:
            converged = True
            break

    logger.debug("PFO 结束：%d 轮，适应度 %.4f -> %.4f", iterations, initial, current)
    return FusionResult(p_star=state[:3].copy(), s_star=state[3:].copy(), fitness=current,
                        iterations=iterations, converged=converged, initial_fitness=initial)


def _fused_box(obj: GlobalObject, pst: SwarmTemplate, config: FusionConfig) -> OrientedBox3D:
    if config.strategy == "best_score":
        return obj.top_candidate().box_world
    if config.strategy == "average" or obj.fusion_count == 0:
        center, size, quat = init_from_candidates(obj.candidates)
    else:
        center, size, quat = obj.box.center, obj.box.size, obj.box.rotation
    if config.strategy == "average":
        return OrientedBox3D(center, size, quat)
    result = pfo_optimize((center, size, quat), obj.candidates, pst, config)
    return OrientedBox3D(result.p_star, result.s_star, quat)


def maybe_fuse(obj: GlobalObject, pst: SwarmTemplate, config: FusionConfig) -> GlobalObject:
    """
    满足触发条件时融合全局框

    Args:
        obj: 全局物体（原地修改）
        pst: 粒子模板
        config: 融合参数

    Returns:
        GlobalObject: 原物体

    Note:
        - 仅当 |Ψ| ≥ tau_box 且有新候选（fused_dirty）时运行
        - 首次融合从候选均值初始化，之后以当前全局框热启动；旋转保持不变
        - strategy 为 none 时不做任何修改
    """
    if config.strategy == "none":
        return obj
    if not obj.fused_dirty or len(obj.candidates) < config.tau_box:
        return obj
    obj.box = _fused_box(obj, pst, config)
    obj.fused_dirty = False
    obj.fusion_count += 1
    return obj
