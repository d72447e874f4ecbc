"""针孔投影：包围盒投影凸包与图像范围裁剪"""
from typing import Optional

import numpy as np

from .polygon import clip_to_rectangle, convex_hull
from .transforms import box_corners
from ..models.box import Intrinsics, OrientedBox3D, Polygon2D, Pose

# 相机坐标系深度小于该值的角点视为不可见（米）
Z_NEAR = 0.05


def project_points(intrinsics: Intrinsics, points_cam: np.ndarray) -> np.ndarray:
    """针孔投影 u = fx·x/z + cx，v = fy·y/z + cy"""
    z = points_cam[..., 2]
    u = intrinsics.fx * points_cam[..., 0] / z + intrinsics.cx
    v = intrinsics.fy * points_cam[..., 1] / z + intrinsics.cy
    return np.stack([u, v], axis=-1)


def project_box_hull(intrinsics: Intrinsics, cam_from_world: Pose, box_world: OrientedBox3D,
                     z_near: float = Z_NEAR) -> Optional[Polygon2D]:
    """
    把世界坐标系的包围盒投影到图像并求角点凸包

    Args:
        intrinsics: 相机内参
        cam_from_world: 世界到相机的变换
        box_world: 世界坐标系中的包围盒
        z_near: 可见深度下限

    Returns:
        Optional[Polygon2D]: 投影凸包；任一角点深度小于 z_near 时返回 None（不可见）

    Note:
        凸包不裁剪到图像范围内
    """
    corners_cam = cam_from_world.apply(box_corners(box_world))
    if np.any(corners_cam[:, 2] < z_near):
        return None
    return convex_hull(project_points(intrinsics, corners_cam))


def clip_to_image(polygon: Optional[Polygon2D], intrinsics: Intrinsics) -> Optional[Polygon2D]:
    """把投影凸包裁剪到图像范围；None 原样返回"""
    if polygon is None:
        return None
    return clip_to_rectangle(polygon, intrinsics.width, intrinsics.height)
