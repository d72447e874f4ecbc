"""空间关联：有向三维 NMS 与视角多样性门控"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .candidates import add_candidate, new_global_object, view_diversity_gate
from .outcome import AssociationOutcome
from ..config.settings import AssociationConfig
from ..geometry.iou3d import mc_iou_3d
from ..geometry.transforms import aabb_of, aabb_overlap_matrix
from ..models.box import OrientedBox3D
from ..models.global_object import CandidateObservation, GlobalObject

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class _Entry:
    """NMS 中的一个框：已有全局物体或新提议"""

    box: OrientedBox3D
    score: float
    sort_key: Tuple
    obj: Optional[GlobalObject] = None
    pending: List[CandidateObservation] = field(default_factory=list)
    suppressed: bool = False

    @property
    def is_global(self) -> bool:
        return self.obj is not None


def _build_entries(globals_: Sequence[GlobalObject],
                   proposals: Sequence[CandidateObservation]) -> List[_Entry]:
    entries = [_Entry(obj.box, obj.score, (-obj.score, 0, obj.id, 0), obj=obj) for obj in globals_]
    entries += [_Entry(p.box_world, p.score, (-p.score, 1, p.frame_id, i), pending=[p])
                for i, p in enumerate(proposals)]
    entries.sort(key=lambda e: e.sort_key)
    return entries


class _SpatialMerger:
    """把被抑制的框并入保留框，维护计数与物体存活状态"""

    def __init__(self, config: AssociationConfig, outcome: AssociationOutcome):
        self.config = config
        self.outcome = outcome
        self.removed: set = set()

    def store(self, obj: GlobalObject, observation: CandidateObservation) -> None:
        if add_candidate(obj, observation, self.config):
            self.outcome.spatial_targets.append(obj)
        else:
            self.outcome.dropped += 1

    def merge_objects(self, keeper: GlobalObject, other: GlobalObject) -> None:
        """合并两个全局物体：候选逐个门控并入，保留较小的编号与保留者的框"""
        kept_id, removed_id = min(keeper.id, other.id), max(keeper.id, other.id)
        for candidate in other.candidates:
            add_candidate(keeper, candidate, self.config)
        if other.feature is not None and keeper.feature is None:
            keeper.feature = other.feature
        keeper.id = kept_id
        # 被吸收方在后续重定向到保留者
        self.outcome.spatial_targets[:] = [keeper if t is other else t
                                           for t in self.outcome.spatial_targets]
        self.removed.add(id(other))
        self.outcome.merged_objects.append((kept_id, removed_id))
        logger.debug("合并全局物体 %d <- %d", kept_id, removed_id)

    def absorb(self, keeper: _Entry, other: _Entry) -> None:
        if keeper.is_global:
            if other.is_global:
                self.merge_objects(keeper.obj, other.obj)
            else:
                for observation in other.pending:
                    self.store(keeper.obj, observation)
            return
        if other.is_global:
            # 高分提议抑制了已有物体：该物体成为提议的承载者
            keeper.obj = other.obj
            for observation in keeper.pending:
                self.store(keeper.obj, observation)
            keeper.pending = []
            return
        for observation in other.pending:
            if view_diversity_gate(keeper.pending, observation.frame.world_from_cam,
                                   self.config.tau_r, self.config.tau_t):
                keeper.pending.append(observation)
            else:
                self.outcome.dropped += 1


def spatial_associate(globals_: Sequence[GlobalObject], proposals: Sequence[CandidateObservation],
                      config: AssociationConfig, seed: int = 0,
                      allocate_id: Optional[Callable[[], int]] = None,
                      create_new: bool = True) -> AssociationOutcome:
    """
    有向三维 NMS：把新提议并入已有全局物体

    Args:
        globals_: 已有全局物体
        proposals: 世界坐标系下的提议观测
        config: 关联参数
        seed: 蒙特卡罗 IoU 的随机种子
        allocate_id: 新物体编号分配函数，create_new 为 True 时必须提供
        create_new: 为 True 时未被抑制的提议直接新建物体；否则留在 unmatched 中

    Returns:
        AssociationOutcome: 关联结果

    Note:
        - 全部框按 (置信度降序, 已有物体优先, 编号或帧号, 输入顺序) 排序
        - 依次以未被抑制的框为保留者，与其后 AABB 相交的框计算蒙特卡罗 IoU，
          大于 tau_3d 的框被抑制并在门控通过后并入保留者
        - 门控失败的提议被丢弃
    """
    outcome = AssociationOutcome()
    entries = _build_entries(globals_, proposals)
    merger = _SpatialMerger(config, outcome)

    if entries:
        bounds = [aabb_of(entry.box) for entry in entries]
        overlap = aabb_overlap_matrix(np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds]))
        for i, keeper in enumerate(entries):
            if keeper.suppressed:
                continue
            for j in np.flatnonzero(overlap[i, i + 1:]) + i + 1:
                other = entries[j]
                if other.suppressed:
                    continue
                iou = mc_iou_3d(keeper.box, other.box, config.o_n, seed)
                if iou > config.tau_3d:
                    other.suppressed = True
                    merger.absorb(keeper, other)

    for entry in entries:
        if entry.is_global:
            continue
        if entry.suppressed or not entry.pending:
            continue
        head, rest = entry.pending[0], entry.pending[1:]
        if create_new:
            if allocate_id is None:
                raise ValueError("create_new 需要 allocate_id")
            obj = new_global_object(allocate_id(), head)
            outcome.created.append(obj)
            for observation in rest:
                merger.store(obj, observation)
        else:
            outcome.unmatched.append(head)
            outcome.followers.append(rest)

    survivors = [obj for obj in globals_ if id(obj) not in merger.removed]
    outcome.objects = sorted(survivors + outcome.created, key=lambda o: o.id)
    return outcome
