"""流式处理：关键帧选择 → 坐标变换 → 空间关联 → 对应关联 → 融合 → 语义更新"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from .keyframe import is_keyframe
from ..association.correspondence import correspondence_associate, create_objects
from ..association.outcome import AssociationOutcome
from ..association.spatial import spatial_associate
from ..config.settings import RunConfig
from ..exceptions.fusion_exceptions import FrameOrderError
from ..fusion.optimizer import maybe_fuse
from ..fusion.swarm import SwarmTemplate, pst_generate
from ..geometry.transforms import transform_box
from ..models.box import OrientedBox3D, Pose
from ..models.frame import CameraFrame, FrameInput
from ..models.global_object import CandidateObservation
from ..models.scene_state import PIPELINE_STAGES, SceneSnapshot, SceneState, SnapshotObject
from ..semantics.features import fuse_features
from ..utils.timing import stopwatch

logger = logging.getLogger(__name__)


@dataclass
class FrameEvents:
    """单帧处理事件，非关键帧只有 frame_id 与 keyframe=False"""

    frame_id: int
    keyframe: bool
    n_proposals: int = 0
    created: List[int] = field(default_factory=list)
    merged_spatial: int = 0
    merged_correspondence: int = 0
    spatial_ids: List[int] = field(default_factory=list)
    correspondence_ids: List[int] = field(default_factory=list)
    merged_objects: List[Tuple[int, int]] = field(default_factory=list)
    dropped: int = 0
    fused: List[int] = field(default_factory=list)
    timings_ms: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame_id": self.frame_id,
            "keyframe": self.keyframe,
            "n_proposals": self.n_proposals,
            "created": self.created,
            "merged_spatial": self.merged_spatial,
            "merged_correspondence": self.merged_correspondence,
            "spatial_ids": self.spatial_ids,
            "correspondence_ids": self.correspondence_ids,
            "merged_objects": [list(pair) for pair in self.merged_objects],
            "dropped": self.dropped,
            "fused": self.fused,
            "timings_ms": self.timings_ms,
        }


def _box_dict(box: OrientedBox3D) -> Dict[str, List[float]]:
    return {"center": box.center.tolist(), "size": box.size.tolist(), "rotation": box.rotation.tolist()}


def _pose_dict(pose: Pose) -> Dict[str, List[float]]:
    return {"quaternion": pose.rotation.tolist(), "translation": pose.translation.tolist()}


def process_frame(state: SceneState, frame: FrameInput, config: RunConfig,
                  pst: SwarmTemplate) -> FrameEvents:
    """
    处理一帧输入

    Args:
        state: 场景状态（原地修改）
        frame: 帧输入
        config: 运行配置
        pst: 粒子模板

    Returns:
        FrameEvents: 本帧事件

    Raises:
        FrameOrderError: 帧号不大于已处理的帧号

    Note:
        - 非关键帧不修改物体与帧登记表
        - 每帧满足 n_proposals = created + merged_spatial + merged_correspondence + dropped
        - 融合后的框不会在同一帧内重新触发关联
    """
    if state.last_frame_id is not None and frame.frame_id <= state.last_frame_id:
        raise FrameOrderError(f"帧号 {frame.frame_id} 不大于上一帧 {state.last_frame_id}")
    state.last_frame_id = frame.frame_id
    state.stats.frames_seen += 1

    kf = config.keyframe
    if not is_keyframe(frame.world_from_cam, state.last_keyframe_pose, kf.theta_kf, kf.d_kf):
        return FrameEvents(frame_id=frame.frame_id, keyframe=False)
    state.last_keyframe_pose = frame.world_from_cam
    state.stats.keyframes += 1
    state.stats.proposals_seen += len(frame.proposals)

    assoc = config.association
    timings: Dict[str, float] = {}
    fused: List[int] = []
    camera = CameraFrame(frame.frame_id, frame.intrinsics, frame.world_from_cam)
    with stopwatch(timings, "total"):
        with stopwatch(timings, "transform"):
            observations = [CandidateObservation(transform_box(frame.world_from_cam, p.box), p.score,
                                                 camera, p.feature)
                            for p in frame.proposals]

        with stopwatch(timings, "spatial"):
            if assoc.enable_spatial:
                spatial = spatial_associate(state.sorted_objects(), observations, assoc, config.seed,
                                            state.allocate_id, create_new=False)
            else:
                spatial = AssociationOutcome(objects=state.sorted_objects(), unmatched=observations,
                                             followers=[[] for _ in observations])

        with stopwatch(timings, "correspondence"):
            if assoc.enable_correspondence:
                corr = correspondence_associate(spatial.unmatched, spatial.objects, camera, assoc,
                                                state.allocate_id, spatial.followers)
            else:
                corr = create_objects(spatial.unmatched, spatial.objects, assoc, state.allocate_id,
                                      spatial.followers)
            state.set_objects(corr.objects)

        with stopwatch(timings, "fusion"):
            for obj in state.sorted_objects():
                if not obj.fused_dirty:
                    continue
                before = obj.fusion_count
                maybe_fuse(obj, pst, config.fusion)
                if obj.fusion_count > before:
                    fused.append(obj.id)

        with stopwatch(timings, "semantics"):
            for obj in state.sorted_objects():
                if obj.feature_dirty:
                    obj.feature = fuse_features(obj.candidates)
                    obj.feature_dirty = False

        state.register_frame(camera)
        state.prune_frames()

    stats = state.stats
    events = FrameEvents(
        frame_id=frame.frame_id,
        keyframe=True,
        n_proposals=len(observations),
        created=spatial.created_ids + corr.created_ids,
        merged_spatial=spatial.merged_spatial + corr.merged_spatial,
        merged_correspondence=corr.merged_correspondence,
        spatial_ids=sorted(set(spatial.spatial_ids + corr.spatial_ids)),
        correspondence_ids=corr.correspondence_ids,
        merged_objects=spatial.merged_objects,
        dropped=spatial.dropped + corr.dropped,
        fused=fused,
        timings_ms={stage: timings[stage] * 1000.0 for stage in PIPELINE_STAGES},
    )
    stats.objects_created += len(events.created)
    stats.merges_spatial += events.merged_spatial
    stats.merges_correspondence += events.merged_correspondence
    stats.merges_objects += len(events.merged_objects)
    stats.gate_dropped += events.dropped
    stats.fusions_run += len(fused)
    for stage in PIPELINE_STAGES:
        stats.stage_times[stage].record(timings[stage])
    logger.debug("帧 %d：新建 %s，空间并入 %d，对应并入 %d，丢弃 %d，融合 %s",
                 frame.frame_id, events.created, events.merged_spatial,
                 events.merged_correspondence, events.dropped, fused)
    return events


def export_scene(state: SceneState) -> SceneSnapshot:
    """把全局物体导出为按编号排序的不可变快照"""
    return SceneSnapshot(tuple(
        SnapshotObject(id=obj.id, box=obj.box, score=obj.score, n_views=len(obj.candidates),
                       feature=obj.feature)
        for obj in state.sorted_objects()))


def state_dict(state: SceneState) -> Dict[str, Any]:
    """
    序列化物体、候选列表与帧登记表

    Note:
        不包含计数器与耗时；结果只取决于最终的物体与候选集合，与处理过的帧数无关
    """
    objects = []
    for obj in state.sorted_objects():
        objects.append({
            "id": obj.id,
            "box": _box_dict(obj.box),
            "feature": None if obj.feature is None else obj.feature.tolist(),
            "candidates": [{
                "frame_id": c.frame_id,
                "score": c.score,
                "box": _box_dict(c.box_world),
                "feature": None if c.feature is None else c.feature.tolist(),
            } for c in obj.candidates],
        })
    frames = [{
        "frame_id": frame_id,
        "intrinsics": [frame.intrinsics.fx, frame.intrinsics.fy, frame.intrinsics.cx,
                       frame.intrinsics.cy, frame.intrinsics.width, frame.intrinsics.height],
        "pose": _pose_dict(frame.world_from_cam),
    } for frame_id, frame in sorted(state.frames.items())]
    return {"objects": objects, "frames": frames}


class StreamPipeline:
    """持有场景状态与粒子模板，按顺序处理一个检测流"""

    def __init__(self, config: RunConfig, state: Optional[SceneState] = None):
        self.config = config
        self.state = state if state is not None else SceneState()
        self.pst = pst_generate(config.fusion.n_pst, config.seed)

    def process_frame(self, frame: FrameInput) -> FrameEvents:
        return process_frame(self.state, frame, self.config, self.pst)

    def run(self, frames: Iterable[FrameInput]) -> Iterator[FrameEvents]:
        """逐帧处理并产出事件"""
        for frame in frames:
            yield self.process_frame(frame)

    def export_scene(self) -> SceneSnapshot:
        return export_scene(self.state)

    def state_dict(self) -> Dict[str, Any]:
        return state_dict(self.state)
