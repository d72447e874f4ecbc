from typing import Tuple

import numpy as np

from ..models.box import OrientedBox3D, Pose

# 角点 i 的符号位：bit2 -> l，bit1 -> w，bit0 -> h；0 为负半边，1 为正半边
UNIT_CORNERS = np.array([[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)],
                        dtype=np.float64) - 0.5
UNIT_CORNERS.setflags(write=False)

# 仅在一个符号位上不同的角点对即为一条棱
BOX_EDGES = tuple((i, i | bit) for i in range(8) for bit in (4, 2, 1) if not i & bit)

CONTAINMENT_TOLERANCE = 1e-9


def box_corners(box: OrientedBox3D) -> np.ndarray:
    """
    计算包围盒的 8 个角点

    Args:
        box: 有向包围盒

    Returns:
        np.ndarray: (8, 3)，角点 i = center + R·(s ⊙ UNIT_CORNERS[i])
    """
    return (UNIT_CORNERS * box.size) @ box.matrix.T + box.center


def batch_box_corners(centers: np.ndarray, sizes: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    """
    批量计算角点

    Args:
        centers: (..., 3)
        sizes: (..., 3)
        rotation: (3, 3) 共享旋转，或 (..., 3, 3) 逐个旋转，前导维度可广播

    Returns:
        np.ndarray: (..., 8, 3)
    """
    local = UNIT_CORNERS * sizes[..., None, :]
    return local @ np.swapaxes(rotation, -1, -2) + centers[..., None, :]


def transform_box(pose: Pose, box: OrientedBox3D) -> OrientedBox3D:
    """
    用刚体变换移动包围盒：center' = R·center + t，rotation' = R·rotation，尺寸不变

    Args:
        pose: 刚体变换
        box: 待变换的包围盒

    Returns:
        OrientedBox3D: 变换后的包围盒
    """
    return OrientedBox3D.from_rotation(pose.apply(box.center), box.size,
                                       pose.scipy_rotation * box.scipy_rotation)


def points_in_box(box: OrientedBox3D, points: np.ndarray) -> np.ndarray:
    """批量判断点是否在盒内（边界包含）"""
    local = (np.asarray(points, dtype=np.float64) - box.center) @ box.matrix
    return np.all(np.abs(local) <= box.size / 2.0 + CONTAINMENT_TOLERANCE, axis=-1)


def contains_point(box: OrientedBox3D, point: np.ndarray) -> bool:
    """|Rᵀ(p − center)| ≤ size/2 逐分量成立时返回 True"""
    return bool(points_in_box(box, np.asarray(point, dtype=np.float64).reshape(1, 3))[0])


def aabb_of(box: OrientedBox3D) -> Tuple[np.ndarray, np.ndarray]:
    """
    轴对齐包围盒

    Returns:
        Tuple[np.ndarray, np.ndarray]: (min, max)，均为长度 3 的向量
    """
    corners = box_corners(box)
    return corners.min(axis=0), corners.max(axis=0)


def aabb_overlap_matrix(mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    """(n, 3) 的 min/max 数组两两之间是否相交（接触视为相交）"""
    return np.all((mins[:, None, :] <= maxs[None, :, :]) & (mins[None, :, :] <= maxs[:, None, :]),
                  axis=-1)


def aabb_iou(min_a: np.ndarray, max_a: np.ndarray, min_b: np.ndarray, max_b: np.ndarray) -> float:
    """两个轴对齐盒的体积 IoU"""
    overlap = np.clip(np.minimum(max_a, max_b) - np.maximum(min_a, min_b), 0.0, None)
    inter = float(np.prod(overlap))
    union = float(np.prod(max_a - min_a) + np.prod(max_b - min_b)) - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)
