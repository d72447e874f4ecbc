"""对应关联：在当前视角比较裁剪到图像内的投影 IoU，处理三维不重叠的小物体"""
import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from .candidates import add_candidate, new_global_object
from .outcome import AssociationOutcome
from ..config.settings import AssociationConfig
from ..geometry.projection import clip_to_image, project_box_hull
from ..geometry.silhouette import ConvexRegion, boxes_in_camera, project_boxes, silhouette_iou
from ..models.frame import CameraFrame
from ..models.global_object import CandidateObservation, GlobalObject

logger = logging.getLogger(__name__)


def projective_ious(observation: CandidateObservation, objects: Sequence[GlobalObject],
                    frame: CameraFrame) -> np.ndarray:
    """
    提议与各全局物体在当前视角下的投影 IoU

    Returns:
        np.ndarray: (K,)；不可见的物体为 -1，提议自身不可见或完全位于图像外时全部为 -1

    Note:
        两侧投影都先裁剪到图像范围
    """
    result = np.full(len(objects), -1.0)
    if not objects:
        return result
    hull = clip_to_image(project_box_hull(frame.intrinsics, frame.cam_from_world, observation.box_world),
                         frame.intrinsics)
    if hull is None or hull.is_degenerate:
        return result
    cam = frame.cam_from_world
    centers_cam, rotations_cam = boxes_in_camera(np.array([obj.box.center for obj in objects]),
                                                 np.array([obj.box.matrix for obj in objects]),
                                                 cam.matrix, cam.translation)
    boxes = project_boxes(centers_cam, rotations_cam, np.array([obj.box.size for obj in objects]),
                          frame.intrinsics.vector)
    image = ConvexRegion.rectangle([frame.intrinsics.width], [frame.intrinsics.height])
    ious = silhouette_iou(boxes, ConvexRegion.from_polygons([hull]), image)
    return np.where(boxes.visible, ious, -1.0)


def correspondence_associate(unmatched: Sequence[CandidateObservation],
                             globals_: Sequence[GlobalObject], frame: CameraFrame,
                             config: AssociationConfig, allocate_id: Callable[[], int],
                             followers: Optional[Sequence[List[CandidateObservation]]] = None
                             ) -> AssociationOutcome:
    """
    按投影凸包 IoU 关联空间关联未匹配的提议

    Args:
        unmatched: 空间关联后剩余的提议
        globals_: 当前全局物体
        frame: 当前关键帧
        config: 关联参数
        allocate_id: 新物体编号分配函数
        followers: 与 unmatched 对应的被抑制观测，随其头部提议一起存储

    Returns:
        AssociationOutcome: 关联结果

    Note:
        - 提议按置信度降序处理，本轮新建的物体也参与后续提议的匹配
        - 取 IoU 最大的可见物体，大于 tau_2d 时门控并入，否则新建物体
        - IoU 并列时取编号较小者
    """
    followers = list(followers) if followers is not None else [[] for _ in unmatched]
    outcome = AssociationOutcome()
    objects: List[GlobalObject] = sorted(globals_, key=lambda o: o.id)
    order = sorted(range(len(unmatched)),
                   key=lambda i: (-unmatched[i].score, unmatched[i].frame_id, i))

    for index in order:
        observation = unmatched[index]
        ious = projective_ious(observation, objects, frame)
        best = int(np.argmax(ious)) if len(ious) else -1
        if best >= 0 and ious[best] > config.tau_2d:
            target = objects[best]
            logger.debug("投影 IoU %.3f：提议并入物体 %d", ious[best], target.id)
            if add_candidate(target, observation, config):
                outcome.correspondence_targets.append(target)
            else:
                outcome.dropped += 1
        else:
            target = new_global_object(allocate_id(), observation)
            outcome.created.append(target)
            objects.append(target)
        for follower in followers[index]:
            if add_candidate(target, follower, config):
                outcome.spatial_targets.append(target)
            else:
                outcome.dropped += 1

    outcome.objects = sorted(objects, key=lambda o: o.id)
    return outcome


def create_objects(unmatched: Sequence[CandidateObservation], globals_: Sequence[GlobalObject],
                   config: AssociationConfig, allocate_id: Callable[[], int],
                   followers: Optional[Sequence[List[CandidateObservation]]] = None
                   ) -> AssociationOutcome:
    """不做对应关联，未匹配提议直接新建物体"""
    followers = list(followers) if followers is not None else [[] for _ in unmatched]
    outcome = AssociationOutcome()
    order = sorted(range(len(unmatched)),
                   key=lambda i: (-unmatched[i].score, unmatched[i].frame_id, i))
    for index in order:
        target = new_global_object(allocate_id(), unmatched[index])
        outcome.created.append(target)
        for follower in followers[index]:
            if add_candidate(target, follower, config):
                outcome.spatial_targets.append(target)
            else:
                outcome.dropped += 1
    outcome.objects = sorted(list(globals_) + outcome.created, key=lambda o: o.id)
    return outcome
