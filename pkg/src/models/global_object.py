from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .box import Intrinsics, OrientedBox3D, Pose
from .frame import CameraFrame


@dataclass(eq=False)
class CandidateObservation:
    """全局物体候选列表 Ψ 中的一个单视角观测（世界坐标系）"""

    box_world: OrientedBox3D
    score: float
    frame: CameraFrame
    feature: Optional[np.ndarray] = None

    @property
    def frame_id(self) -> int:
        return self.frame.frame_id

    @property
    def cam_from_world(self) -> Pose:
        return self.frame.cam_from_world

    @property
    def intrinsics(self) -> Intrinsics:
        return self.frame.intrinsics


@dataclass(eq=False)
class GlobalObject:
    """
    融合后的全局物体

    Note:
        - box 为全局框 G，candidates 为多视角候选列表 Ψ
        - score 始终等于候选中的最大置信度
        - fused_dirty 表示上次融合后有新的候选加入
    """

    id: int
    box: OrientedBox3D
    candidates: List[CandidateObservation] = field(default_factory=list)
    feature: Optional[np.ndarray] = None
    fused_dirty: bool = False
    feature_dirty: bool = False
    fusion_count: int = 0

    @property
    def score(self) -> float:
        return max(c.score for c in self.candidates)

    @property
    def frame_ids(self) -> List[int]:
        return [c.frame_id for c in self.candidates]

    def top_candidate(self) -> CandidateObservation:
        """置信度最高的候选，并列时取列表中靠前者"""
        best = self.candidates[0]
        for candidate in self.candidates[1:]:
            if candidate.score > best.score:
                best = candidate
        return best
