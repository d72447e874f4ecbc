from dataclasses import dataclass, field
from typing import List, Tuple

from ..models.global_object import CandidateObservation, GlobalObject


@dataclass
class AssociationOutcome:
    """
    一次关联的结果

    Note:
        - objects 为关联后的全部全局物体
        - spatial_targets / correspondence_targets 按被存储的提议逐个记录目标物体，
          物体编号可能在同一次关联中因合并而变化，取编号请用 *_ids 属性
        - unmatched 与 followers 一一对应：followers[i] 是被 unmatched[i] 在 NMS 中抑制、
          尚待存储的观测
        - 每个提议恰好计入 created、spatial_targets、correspondence_targets、dropped 之一
    """

    objects: List[GlobalObject] = field(default_factory=list)
    created: List[GlobalObject] = field(default_factory=list)
    spatial_targets: List[GlobalObject] = field(default_factory=list)
    correspondence_targets: List[GlobalObject] = field(default_factory=list)
    merged_objects: List[Tuple[int, int]] = field(default_factory=list)
    dropped: int = 0
    unmatched: List[CandidateObservation] = field(default_factory=list)
    followers: List[List[CandidateObservation]] = field(default_factory=list)

    @property
    def created_ids(self) -> List[int]:
        return [obj.id for obj in self.created]

    @property
    def merged_spatial(self) -> int:
        return len(self.spatial_targets)

    @property
    def merged_correspondence(self) -> int:
        return len(self.correspondence_targets)

    @property
    def spatial_ids(self) -> List[int]:
        return sorted({obj.id for obj in self.spatial_targets})

    @property
    def correspondence_ids(self) -> List[int]:
        return sorted({obj.id for obj in self.correspondence_targets})

    @property
    def n_proposals(self) -> int:
        """已有去向的提议数（不含仍在 unmatched 中的）"""
        return len(self.created) + self.merged_spatial + self.merged_correspondence + self.dropped
