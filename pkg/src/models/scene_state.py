from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .box import OrientedBox3D, Pose
from .frame import CameraFrame
from .global_object import GlobalObject
from ..utils.timing import LatencyHistogram

PIPELINE_STAGES = ("transform", "spatial", "correspondence", "fusion", "semantics", "total")


@dataclass
class PipelineStats:
    """流水线计数器与分阶段耗时直方图，计数器只增不减"""

    frames_seen: int = 0
    keyframes: int = 0
    proposals_seen: int = 0
    objects_created: int = 0
    merges_spatial: int = 0
    merges_correspondence: int = 0
    merges_objects: int = 0
    gate_dropped: int = 0
    fusions_run: int = 0
    stage_times: Dict[str, LatencyHistogram] = field(
        default_factory=lambda: {stage: LatencyHistogram() for stage in PIPELINE_STAGES})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames_seen": self.frames_seen,
            "keyframes": self.keyframes,
            "proposals_seen": self.proposals_seen,
            "objects_created": self.objects_created,
            "merges_spatial": self.merges_spatial,
            "merges_correspondence": self.merges_correspondence,
            "merges_objects": self.merges_objects,
            "gate_dropped": self.gate_dropped,
            "fusions_run": self.fusions_run,
            "stage_times": {name: hist.to_dict() for name, hist in self.stage_times.items()},
        }


@dataclass(frozen=True, eq=False)
class SnapshotObject:
    """场景快照中的一个物体记录"""

    id: int
    box: OrientedBox3D
    score: float
    n_views: int
    feature: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class SceneSnapshot:
    """不可变的场景快照，物体按编号升序排列"""

    objects: Tuple[SnapshotObject, ...] = ()

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def ids(self) -> List[int]:
        return [obj.id for obj in self.objects]


class SceneState:
    """
    场景状态：全局物体集合与被候选引用的关键帧登记表

    Note:
        - 登记表只保留仍被某个候选引用的帧，状态大小为 O(Σ|Ψ|)，与处理过的总帧数无关
        - 不保存任何点云、网格或体素
    """

    def __init__(self):
        self.objects: Dict[int, GlobalObject] = {}
        self.frames: Dict[int, CameraFrame] = {}
        self.last_keyframe_pose: Optional[Pose] = None
        self.last_frame_id: Optional[int] = None
        self.next_object_id: int = 0
        self.stats = PipelineStats()

    def allocate_id(self) -> int:
        """分配新的物体编号"""
        object_id = self.next_object_id
        self.next_object_id += 1
        return object_id

    def set_objects(self, objects: List[GlobalObject]) -> None:
        self.objects = {obj.id: obj for obj in sorted(objects, key=lambda o: o.id)}

    def sorted_objects(self) -> List[GlobalObject]:
        return [self.objects[key] for key in sorted(self.objects)]

    def referenced_frame_ids(self) -> set:
        return {c.frame_id for obj in self.objects.values() for c in obj.candidates}

    def register_frame(self, frame: CameraFrame) -> None:
        """仅当该帧至少有一个候选被保存时登记"""
        if frame.frame_id in self.referenced_frame_ids():
            self.frames[frame.frame_id] = frame

    def prune_frames(self) -> int:
        """
        删除不再被任何候选引用的帧

        Returns:
            int: 删除的帧数
        """
        referenced = self.referenced_frame_ids()
        stale = [frame_id for frame_id in self.frames if frame_id not in referenced]
        for frame_id in stale:
            del self.frames[frame_id]
        return len(stale)


@dataclass(frozen=True, eq=False)
class GroundTruthObject:
    """带稳定编号的真值物体"""

    id: int
    box: OrientedBox3D
