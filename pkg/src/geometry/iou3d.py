from typing import List

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .transforms import aabb_of, box_corners, points_in_box
from ..models.box import OrientedBox3D
from ..utils.random_streams import unit_cube_samples

# 角点编号下每个面的循环顺序（两个自由符号位按格雷码排列）
_GRAY = ((0, 0), (0, 1), (1, 1), (1, 0))


def _face_indices() -> List[List[int]]:
    faces = []
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for side in (0, 1):
            face = []
            for bits in _GRAY:
                index = side << (2 - axis)
                index |= bits[0] << (2 - others[0])
                index |= bits[1] << (2 - others[1])
                face.append(index)
            faces.append(face)
    return faces


BOX_FACES = tuple(tuple(face) for face in _face_indices())


def mc_iou_3d(a: OrientedBox3D, b: OrientedBox3D, n_samples: int = 2048, seed: int = 0) -> float:
    """
    蒙特卡罗估计三维 IoU

    Args:
        a: 包围盒
        b: 包围盒
        n_samples: 每个盒内的采样点数 O_n
        seed: 随机种子

    Returns:
        float: [0, 1]

    Note:
        - 在 a 内均匀采样并统计落在 b 内的比例 f_a，反之得到 f_b
        - 交集体积估计为 ½(f_a·|a| + f_b·|b|)
        - 两个盒共用同一个单位立方体采样模板，交换 a、b 结果按位相同
    """
    unit = unit_cube_samples(int(n_samples), int(seed))
    pts_a = (unit * a.size) @ a.matrix.T + a.center
    pts_b = (unit * b.size) @ b.matrix.T + b.center
    f_a = float(np.count_nonzero(points_in_box(b, pts_a))) / len(unit)
    f_b = float(np.count_nonzero(points_in_box(a, pts_b))) / len(unit)
    vol_a, vol_b = a.volume, b.volume
    inter = 0.5 * (f_a * vol_a + f_b * vol_b)
    union = vol_a + vol_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def box_halfspaces(box: OrientedBox3D):
    """
    包围盒的 6 个半空间 n·x ≤ d

    Returns:
        Tuple[np.ndarray, np.ndarray]: (6, 3) 法向与 (6,) 偏移
    """
    normals = np.concatenate([box.matrix.T, -box.matrix.T], axis=0)
    half = np.concatenate([box.size, box.size]) / 2.0
    offsets = normals @ box.center + half
    return normals, offsets


def clip_polytope(faces: List[np.ndarray], normal: np.ndarray, offset: float) -> List[np.ndarray]:
    """
    用半空间 normal·x ≤ offset 裁剪凸多面体

    Args:
        faces: 每个面为按环排列的 (k, 3) 顶点数组
        normal: 平面法向
        offset: 平面偏移

    Returns:
        List[np.ndarray]: 裁剪后的面列表，切口处补上一个新面
    """
    clipped = []
    cap = []
    for face in faces:
        dist = face @ normal - offset
        output = []
        count = len(face)
        for i in range(count):
            p, q = face[i], face[(i + 1) % count]
            dp, dq = dist[i], dist[(i + 1) % count]
            if dp <= 0.0:
                output.append(p)
                if dp == 0.0:
                    cap.append(p)
            if (dp <= 0.0) != (dq <= 0.0):
                x = p + (dp / (dp - dq)) * (q - p)
                output.append(x)
                cap.append(x)
        if len(output) >= 3:
            clipped.append(np.array(output))
    if len(cap) >= 3:
        cap_pts = np.array(cap)
        centroid = cap_pts.mean(axis=0)
        axis_u = np.cross(normal, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis_u) < 1e-6:
            axis_u = np.cross(normal, [0.0, 1.0, 0.0])
        axis_u /= np.linalg.norm(axis_u)
        axis_v = np.cross(normal, axis_u)
        rel = cap_pts - centroid
        order = np.argsort(np.arctan2(rel @ axis_v, rel @ axis_u), kind="stable")
        clipped.append(cap_pts[order])
    return clipped


def polytope_volume(faces: List[np.ndarray]) -> float:
    """由面顶点求凸多面体体积，退化时为 0"""
    if not faces:
        return 0.0
    pts = np.concatenate(faces, axis=0)
    if len(pts) < 4:
        return 0.0
    centered = pts - pts.mean(axis=0)
    scale = float(np.abs(centered).max())
    if scale == 0.0 or np.linalg.matrix_rank(centered, tol=1e-10 * scale) < 3:
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def intersection_volume(a: OrientedBox3D, b: OrientedBox3D) -> float:
    """a 的多面体依次被 b 的 6 个半空间裁剪后的体积"""
    min_a, max_a = aabb_of(a)
    min_b, max_b = aabb_of(b)
    if np.any(max_a < min_b) or np.any(max_b < min_a):
        return 0.0
    corners = box_corners(a)
    faces = [corners[list(face)] for face in BOX_FACES]
    normals, offsets = box_halfspaces(b)
    for normal, offset in zip(normals, offsets):
        faces = clip_polytope(faces, normal, offset)
        if not faces:
            return 0.0
    return polytope_volume(faces)


def exact_iou_3d(a: OrientedBox3D, b: OrientedBox3D) -> float:
    """
    精确三维 IoU（半空间裁剪 + 凸多面体体积）

    Args:
        a: 包围盒
        b: 包围盒

    Returns:
        float: [0, 1]
    """
    inter = min(intersection_volume(a, b), a.volume, b.volume)
    union = a.volume + b.volume - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def clip_box_to_halfspaces(box: OrientedBox3D, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """
    用任意半空间集合裁剪包围盒，返回剩余部分的顶点

    Returns:
        np.ndarray: (k, 3)，完全被裁掉时 k = 0
    """
    corners = box_corners(box)
    faces = [corners[list(face)] for face in BOX_FACES]
    for normal, offset in zip(normals, offsets):
        faces = clip_polytope(faces, np.asarray(normal, dtype=np.float64), float(offset))
        if not faces:
            return np.zeros((0, 3))
    return np.concatenate(faces, axis=0)


