from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .box import Intrinsics, OrientedBox3D, Pose
from ..exceptions.fusion_exceptions import InvalidGeometryError


@dataclass(frozen=True, eq=False)
class ProposalInput:
    """单视角检测器输出的一个提议框，box 位于相机坐标系"""

    box: OrientedBox3D
    score: float
    feature: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidGeometryError(f"提议置信度必须位于 [0, 1]：{self.score}")


@dataclass(frozen=True, eq=False)
class FrameInput:
    """
    一帧输入：相机内参、world-from-camera 位姿以及该帧的提议框

    Note:
        provenance 仅供仿真评估使用，记录每个提议对应的真值物体编号；
        流水线不读取该字段，文件写出时也不包含它
    """

    frame_id: int
    timestamp: float
    intrinsics: Intrinsics
    world_from_cam: Pose
    proposals: Tuple[ProposalInput, ...] = ()
    provenance: Tuple[int, ...] = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class CameraFrame:
    """已登记的关键帧：帧号、内参与位姿"""

    frame_id: int
    intrinsics: Intrinsics
    world_from_cam: Pose

    @cached_property
    def cam_from_world(self) -> Pose:
        return self.world_from_cam.inverse()

    @property
    def camera_center(self) -> np.ndarray:
        return self.world_from_cam.translation

    @property
    def viewing_direction(self) -> np.ndarray:
        return self.world_from_cam.viewing_direction
