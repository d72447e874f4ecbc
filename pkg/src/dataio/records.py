"""磁盘记录的 pydantic 模式：检测流、真值、场景快照与标签库"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from ..models.box import Intrinsics, OrientedBox3D, Pose, optional_feature
from ..models.frame import ProposalInput
from ..models.scene_state import GroundTruthObject, SnapshotObject

FORMAT_VERSION = 1
STREAM_FORMAT = "boxfusion-stream"
GROUNDTRUTH_FORMAT = "boxfusion-groundtruth"
SNAPSHOT_FORMAT = "boxfusion-snapshot"
LABELS_FORMAT = "boxfusion-labels"

Vector3 = Tuple[float, float, float]
Quaternion = Tuple[float, float, float, float]


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntrinsicsRecord(_Record):
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @classmethod
    def from_model(cls, intrinsics: Intrinsics) -> "IntrinsicsRecord":
        return cls(fx=intrinsics.fx, fy=intrinsics.fy, cx=intrinsics.cx, cy=intrinsics.cy,
                   width=intrinsics.width, height=intrinsics.height)

    def to_model(self) -> Intrinsics:
        return Intrinsics(self.fx, self.fy, self.cx, self.cy, self.width, self.height)


class PoseRecord(_Record):
    """world-from-camera 位姿"""

    quaternion: Quaternion
    translation: Vector3

    @classmethod
    def from_model(cls, pose: Pose) -> "PoseRecord":
        return cls(quaternion=tuple(pose.rotation.tolist()), translation=tuple(pose.translation.tolist()))

    def to_model(self) -> Pose:
        return Pose(self.quaternion, self.translation)


class BoxRecord(_Record):
    center: Vector3
    size: Tuple[PositiveFloat, PositiveFloat, PositiveFloat]
    rotation: Quaternion

    @staticmethod
    def box_fields(box: OrientedBox3D) -> dict:
        return {"center": tuple(box.center.tolist()), "size": tuple(box.size.tolist()),
                "rotation": tuple(box.rotation.tolist())}

    def to_box(self) -> OrientedBox3D:
        return OrientedBox3D(self.center, self.size, self.rotation)


class ProposalRecord(BoxRecord):
    score: float = Field(ge=0.0, le=1.0)
    feature: Optional[List[float]] = None

    @classmethod
    def from_model(cls, proposal: ProposalInput) -> "ProposalRecord":
        feature = None if proposal.feature is None else proposal.feature.tolist()
        return cls(score=proposal.score, feature=feature, **cls.box_fields(proposal.box))

    def to_model(self) -> ProposalInput:
        return ProposalInput(self.to_box(), self.score, optional_feature(self.feature))


class FrameRecord(_Record):
    """一帧记录；intrinsics 缺省时使用文件头中的默认内参"""

    frame_id: int
    timestamp: float
    intrinsics: Optional[IntrinsicsRecord] = None
    pose: PoseRecord
    proposals: List[ProposalRecord] = Field(default_factory=list)


class FileHeader(_Record):
    format: str
    version: int


class StreamHeader(FileHeader):
    format: Literal["boxfusion-stream"] = STREAM_FORMAT
    version: int = FORMAT_VERSION
    units: Literal["meters"] = "meters"
    intrinsics: Optional[IntrinsicsRecord] = None
    feature_dim: Optional[int] = Field(None, ge=1)


class GroundTruthRecord(BoxRecord):
    id: int

    @classmethod
    def from_model(cls, obj: GroundTruthObject) -> "GroundTruthRecord":
        return cls(id=obj.id, **cls.box_fields(obj.box))

    def to_model(self) -> GroundTruthObject:
        return GroundTruthObject(self.id, self.to_box())


class SnapshotRecord(BoxRecord):
    id: int
    score: float = Field(ge=0.0, le=1.0)
    n_views: int = Field(ge=0)
    feature: Optional[List[float]] = None

    @classmethod
    def from_model(cls, obj: SnapshotObject) -> "SnapshotRecord":
        feature = None if obj.feature is None else obj.feature.tolist()
        return cls(id=obj.id, score=obj.score, n_views=obj.n_views, feature=feature,
                   **cls.box_fields(obj.box))

    def to_model(self) -> SnapshotObject:
        return SnapshotObject(self.id, self.to_box(), self.score, self.n_views,
                              optional_feature(self.feature))


class LabelRecord(_Record):
    label: str
    embedding: List[float] = Field(min_length=1)
