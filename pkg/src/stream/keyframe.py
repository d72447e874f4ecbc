from typing import Optional

import numpy as np

from ..models.box import Pose


def relative_motion(pose: Pose, reference: Pose):
    """
    两个位姿之间的相对旋转角（弧度）与平移距离（米）

    Returns:
        Tuple[float, float]: (角度, 距离)
    """
    delta = reference.scipy_rotation.inv() * pose.scipy_rotation
    angle = float(np.linalg.norm(delta.as_rotvec()))
    distance = float(np.linalg.norm(pose.translation - reference.translation))
    return angle, distance


def is_keyframe(pose: Pose, last_kf: Optional[Pose], theta_kf: float, d_kf: float) -> bool:
    """
    位姿变化足够大时选为关键帧

    Args:
        pose: 当前帧位姿
        last_kf: 上一个关键帧位姿，首帧为 None
        theta_kf: 旋转阈值（弧度）
        d_kf: 平移阈值（米）

    Returns:
        bool: 首帧，或相对旋转 > theta_kf，或平移 > d_kf
    """
    if last_kf is None:
        return True
    angle, distance = relative_motion(pose, last_kf)
    return angle > theta_kf or distance > d_kf
