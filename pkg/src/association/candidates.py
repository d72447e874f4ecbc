"""候选列表 Ψ 的维护：视角多样性门控、容量淘汰与新建全局物体"""
import logging
from typing import Iterable

import numpy as np

from ..config.settings import AssociationConfig
from ..models.box import Pose
from ..models.global_object import CandidateObservation, GlobalObject

logger = logging.getLogger(__name__)


def _viewing_angle(a: np.ndarray, b: np.ndarray) -> float:
    cos = float(np.clip(np.dot(a, b), -1.0, 1.0))
    return float(np.arccos(cos))


def view_diversity_gate(psi: Iterable[CandidateObservation], new_pose: Pose,
                        tau_r: float, tau_t: float) -> bool:
    """
    判断新视角是否与已存储的全部视角足够不同

    Args:
        psi: 已有候选，可为空
        new_pose: 新观测的 world-from-camera 位姿
        tau_r: 视线方向夹角阈值（弧度）
        tau_t: 相机中心距离阈值（米）

    Returns:
        bool: 对每个已有候选，夹角 > tau_r 或平移 > tau_t 均成立时为 True；psi 为空时为 True
    """
    direction = new_pose.viewing_direction
    center = new_pose.translation
    for candidate in psi:
        stored = candidate.frame.world_from_cam
        angle = _viewing_angle(direction, stored.viewing_direction)
        distance = float(np.linalg.norm(center - stored.translation))
        if not (angle > tau_r or distance > tau_t):
            return False
    return True


def evict_candidate(obj: GlobalObject, n_cand_max: int) -> GlobalObject:
    """
    超出容量时淘汰置信度最低的候选

    Args:
        obj: 全局物体
        n_cand_max: 容量上限

    Returns:
        GlobalObject: 原物体（原地修改）

    Note:
        置信度并列时淘汰帧号最早者；已在容量内时不做任何修改
    """
    while len(obj.candidates) > n_cand_max:
        victim = min(range(len(obj.candidates)),
                     key=lambda i: (obj.candidates[i].score, obj.candidates[i].frame_id, i))
        removed = obj.candidates.pop(victim)
        logger.debug("物体 %d 淘汰帧 %d 的候选（置信度 %.3f）", obj.id, removed.frame_id, removed.score)
    return obj


def add_candidate(obj: GlobalObject, observation: CandidateObservation,
                  config: AssociationConfig) -> bool:
    """
    经门控后把观测加入候选列表

    Returns:
        bool: 观测被存储时为 True；门控失败时观测被丢弃
    """
    if not view_diversity_gate(obj.candidates, observation.frame.world_from_cam,
                               config.tau_r, config.tau_t):
        return False
    obj.candidates.append(observation)
    evict_candidate(obj, config.n_cand_max)
    obj.fused_dirty = True
    if observation.feature is not None:
        obj.feature_dirty = True
    return True


def new_global_object(object_id: int, observation: CandidateObservation) -> GlobalObject:
    """由单个观测新建全局物体，全局框即该观测的框"""
    return GlobalObject(id=object_id, box=observation.box_world, candidates=[observation],
                        feature=observation.feature, fused_dirty=True,
                        feature_dirty=observation.feature is not None)
