"""盒投影轮廓：按前向面判定取出有向轮廓棱，用边积分批量计算与凸多边形的交集面积"""
from dataclasses import dataclass, fields, replace
from itertools import product
from typing import Sequence, Tuple

import numpy as np

from .polygon import rectangle
from .projection import Z_NEAR
from .transforms import BOX_EDGES, batch_box_corners
from ..models.box import Polygon2D

# 半平面判定的距离容差（像素）
EDGE_TOLERANCE = 1e-7
# 盒投影轮廓至多为六边形
MAX_SILHOUETTE_EDGES = 6
# 不构成约束的半平面偏移
_FAR = 1e30

_EDGE_STARTS = np.array([start for start, _ in BOX_EDGES], dtype=np.intp)
_EDGE_ENDS = np.array([end for _, end in BOX_EDGES], dtype=np.intp)
_AXIS_OF_BIT = {4: 0, 2: 1, 1: 2}


def _edge_faces() -> np.ndarray:
    """每条棱相邻的两个面，面编号为 2·轴 + (0 负侧 / 1 正侧)"""
    faces = []
    for start, end in BOX_EDGES:
        axis = _AXIS_OF_BIT[start ^ end]
        faces.append([2 * k + ((start >> (2 - k)) & 1) for k in range(3) if k != axis])
    return np.array(faces, dtype=np.intp)


def _silhouette_table() -> Tuple[np.ndarray, np.ndarray]:
    """
    相机在盒局部坐标系中每轴位于负侧外 / 板内 / 正侧外，共 27 种方位

    Returns:
        Tuple[np.ndarray, np.ndarray]: (27, 6) 轮廓棱编号与有效标志；
        轮廓棱恰好连接一个前向面与一个背向面
    """
    faces = _edge_faces()
    edges = np.zeros((27, MAX_SILHOUETTE_EDGES), dtype=np.intp)
    valid = np.zeros((27, MAX_SILHOUETTE_EDGES), dtype=bool)
    for code, states in enumerate(product((-1, 0, 1), repeat=3)):
        front = np.zeros(6, dtype=bool)
        for axis, state in enumerate(states):
            if state:
                front[2 * axis + (state > 0)] = True
        silhouette = np.flatnonzero(front[faces[:, 0]] ^ front[faces[:, 1]])
        edges[code, :len(silhouette)] = silhouette
        valid[code, :len(silhouette)] = True
    edges.setflags(write=False)
    valid.setflags(write=False)
    return edges, valid


_SILHOUETTE_EDGES, _SILHOUETTE_VALID = _silhouette_table()


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _halfplanes(starts: np.ndarray, ends: np.ndarray, valid: np.ndarray):
    """
    逆时针有向边的单位外法向与偏移：区域内的点满足 n·x ≤ d

    Note:
        无效或零长度的边取 n = 0、d = _FAR，对任何点都不构成约束
    """
    direction = ends - starts
    length = np.hypot(direction[..., 0], direction[..., 1])
    usable = valid & (length > 0.0)
    safe = np.where(usable, length, 1.0)
    normals = np.stack([direction[..., 1], -direction[..., 0]], axis=-1) / safe[..., None]
    normals = np.where(usable[..., None], normals, 0.0)
    offsets = np.where(usable, np.sum(normals * starts, axis=-1), _FAR)
    return normals, offsets, usable


class _Batched:
    """按前导维度取子集"""

    def masked(self, mask: np.ndarray):
        """把前导维度广播到 mask 的形状后按布尔掩码取出，结果只有一个前导维度"""
        picked = {}
        for f in fields(self):
            value = getattr(self, f.name)
            picked[f.name] = np.broadcast_to(value, mask.shape + value.shape[mask.ndim:])[mask]
        return replace(self, **picked)


@dataclass(frozen=True, eq=False)
class ConvexRegion(_Batched):
    """
    一组逆时针凸多边形的有向边与半平面

    Note:
        顶点不足的位置用末顶点重复填充，形成的零长度边 valid 为 False；
        前导维度可与 ProjectedBoxes 广播
    """

    starts: np.ndarray
    ends: np.ndarray
    valid: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    origin: np.ndarray
    area: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_polygons(cls, polygons: Sequence[Polygon2D]) -> "ConvexRegion":
        """
        把多边形堆叠为 (K, M) 的区域，M 为最多的顶点数

        Note:
            退化多边形的边全部无效、面积为 0
        """
        length = max([3] + [len(p) for p in polygons])
        verts = np.zeros((len(polygons), length, 2))
        degenerate = np.zeros(len(polygons), dtype=bool)
        for k, polygon in enumerate(polygons):
            if polygon.is_degenerate:
                degenerate[k] = True
                continue
            n = len(polygon)
            verts[k, :n] = polygon.vertices
            verts[k, n:] = polygon.vertices[-1]
        ends = np.roll(verts, -1, axis=1)
        normals, offsets, valid = _halfplanes(verts, ends, ~degenerate[:, None])
        area = np.array([0.0 if p.is_degenerate else p.area for p in polygons])
        return cls(starts=verts, ends=ends, valid=valid, normals=normals, offsets=offsets,
                   origin=verts.mean(axis=1), area=area,
                   lower=verts.min(axis=1), upper=verts.max(axis=1))

    @classmethod
    def rectangle(cls, widths: Sequence[float], heights: Sequence[float]) -> "ConvexRegion":
        """各视角的图像矩形 [0, width] × [0, height]"""
        return cls.from_polygons([rectangle(w, h) for w, h in zip(widths, heights)])


@dataclass(frozen=True, eq=False)
class ProjectedBoxes(_Batched):
    """
    批量盒投影

    Note:
        - starts / ends 为 (..., 6, 2) 的逆时针轮廓边，无效位置为投影中心处的零长度边
        - area 为轮廓面积，lower / upper 为 8 个投影角点的包围矩形
        - 任一角点深度小于近平面时 visible 为 False，其余字段无意义
    """

    starts: np.ndarray
    ends: np.ndarray
    valid: np.ndarray
    center: np.ndarray
    area: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    visible: np.ndarray

    def halfplanes(self):
        return _halfplanes(self.starts, self.ends, self.valid)


def boxes_in_camera(centers: np.ndarray, rotations: np.ndarray, cam_rotation: np.ndarray,
                    cam_translation: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    把世界坐标系的盒中心与旋转变换到相机坐标系

    Args:
        centers: (N, 3)
        rotations: (3, 3) 共享旋转或 (N, 3, 3)
        cam_rotation: cam_from_world 的旋转，单视角 (3, 3) 或 V 个视角 (V, 3, 3)
        cam_translation: cam_from_world 的平移，(3,) 或 (V, 3)

    Returns:
        Tuple[np.ndarray, np.ndarray]: 相机坐标系下的中心与旋转；多视角时中心为 (V, N, 3)，
        旋转为 (V, 1, 3, 3) 或 (V, N, 3, 3)
    """
    cam_rotation = np.asarray(cam_rotation, dtype=np.float64)
    translation = np.asarray(cam_translation, dtype=np.float64)
    centers_cam = centers @ np.swapaxes(cam_rotation, -1, -2) + translation[..., None, :]
    if cam_rotation.ndim == 3:
        cam_rotation = cam_rotation[:, None]
    return centers_cam, cam_rotation @ rotations


def project_boxes(centers_cam: np.ndarray, rotations_cam: np.ndarray, sizes: np.ndarray,
                  intrinsics: np.ndarray, z_near: float = Z_NEAR) -> ProjectedBoxes:
    """
    批量投影盒并提取轮廓

    Args:
        centers_cam: (..., 3) 相机坐标系中心
        rotations_cam: (..., 3, 3) 相机坐标系旋转
        sizes: (..., 3) 完整边长
        intrinsics: (..., 4) 的 (fx, fy, cx, cy)
        z_near: 可见深度下限

    Returns:
        ProjectedBoxes: 前导维度为各输入广播后的形状

    Note:
        相机在盒局部坐标系中的位置 h = -Rᵀc；h_k > s_k/2 时正侧面朝向相机，
        h_k < -s_k/2 时负侧面朝向相机。轮廓边的方向由投影中心位于其左侧确定
    """
    corners = batch_box_corners(centers_cam, sizes, rotations_cam)
    z = corners[..., 2]
    visible = np.all(z >= z_near, axis=-1)
    kc = np.asarray(intrinsics, dtype=np.float64)
    k = kc[..., None, :]
    z_safe = np.maximum(z, z_near)
    uv = np.stack([k[..., 0] * corners[..., 0] / z_safe + k[..., 2],
                   k[..., 1] * corners[..., 1] / z_safe + k[..., 3]], axis=-1)
    zc = np.maximum(centers_cam[..., 2], z_near)
    center = np.stack([kc[..., 0] * centers_cam[..., 0] / zc + kc[..., 2],
                       kc[..., 1] * centers_cam[..., 1] / zc + kc[..., 3]], axis=-1)

    h = -np.sum(centers_cam[..., :, None] * rotations_cam, axis=-2)
    half = sizes / 2.0
    state = np.where(h > half, 2, np.where(h < -half, 0, 1))
    code = state[..., 0] * 9 + state[..., 1] * 3 + state[..., 2]
    edge_ids = _SILHOUETTE_EDGES[code]
    valid = _SILHOUETTE_VALID[code] & visible[..., None]

    a = np.take_along_axis(uv, _EDGE_STARTS[edge_ids][..., None], axis=-2)
    b = np.take_along_axis(uv, _EDGE_ENDS[edge_ids][..., None], axis=-2)
    flip = _cross(b - a, center[..., None, :] - a) < 0.0
    a, b = np.where(flip[..., None], b, a), np.where(flip[..., None], a, b)
    starts = np.where(valid[..., None], a, center[..., None, :])
    ends = np.where(valid[..., None], b, center[..., None, :])
    area = 0.5 * np.sum(_cross(starts - center[..., None, :], ends - center[..., None, :]), axis=-1)
    return ProjectedBoxes(starts=starts, ends=ends, valid=valid, center=center, area=area,
                          lower=uv.min(axis=-2), upper=uv.max(axis=-2), visible=visible)


def _edge_integral(starts: np.ndarray, ends: np.ndarray, edge_valid: np.ndarray,
                   normals: np.ndarray, offsets: np.ndarray, origin: np.ndarray, closed: bool) -> np.ndarray:
    """
    有向边落在凸区域内的部分对 ½∮(x dy − y dx) 的贡献之和

    Note:
        - 边 s + t·d（t ∈ [0, 1]）满足 n·x ≤ d₀ 当且仅当 t·(n·d) ≤ d₀ − n·s
        - 保留的参数区间 [t_lo, t_hi] 贡献 ½(t_hi − t_lo)·(s − o) × d
        - closed 为 True 时区域含边界，否则不含；两侧各取其一，重合的边只计一次
    """
    slack = EDGE_TOLERANCE if closed else -EDGE_TOLERANCE
    direction = ends - starts
    nx, ny = normals[..., None, :, 0], normals[..., None, :, 1]
    room = (offsets[..., None, :] + slack) - starts[..., :, None, 0] * nx - starts[..., :, None, 1] * ny
    rate = direction[..., :, None, 0] * nx + direction[..., :, None, 1] * ny
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = room / rate
    entering = rate < 0.0
    t_lo = np.max(np.where(entering, ratio, 0.0), axis=-1)
    # 平行边：room > 0 得 +inf 不约束，room < 0 得 -inf 整条剔除
    t_hi = np.fmin(np.fmin.reduce(np.where(entering, 1.0, ratio), axis=-1), 1.0)
    span = np.where(edge_valid & (t_hi > t_lo), t_hi - t_lo, 0.0)
    return 0.5 * np.sum(span * _cross(starts - origin[..., None, :], direction), axis=-1)


def intersection_area(boxes: ProjectedBoxes, region: ConvexRegion) -> np.ndarray:
    """
    盒轮廓与凸区域的交集面积

    Note:
        交集边界 = 盒轮廓落在区域内的部分 ∪ 区域边界落在轮廓内的部分，
        两部分的边积分之和即交集面积，与边的排列顺序无关
    """
    normals, offsets, _ = boxes.halfplanes()
    inside_region = _edge_integral(boxes.starts, boxes.ends, boxes.valid, region.normals,
                                   region.offsets, region.origin, closed=True)
    inside_box = _edge_integral(region.starts, region.ends, region.valid, normals, offsets,
                                region.origin, closed=False)
    return np.maximum(inside_region + inside_box, 0.0)


def clipped_area(boxes: ProjectedBoxes, image: ConvexRegion) -> np.ndarray:
    """轮廓裁剪到图像矩形后的面积；只对跨越图像边界的可见轮廓做裁剪"""
    inside = np.all((boxes.lower >= image.lower) & (boxes.upper <= image.upper), axis=-1)
    area = np.array(np.broadcast_to(boxes.area, inside.shape))
    crossing = ~inside & np.broadcast_to(boxes.visible, inside.shape)
    if crossing.any():
        area[crossing] = intersection_area(boxes.masked(crossing), image.masked(crossing))
    return area


def silhouette_iou(boxes: ProjectedBoxes, target: ConvexRegion, image: ConvexRegion) -> np.ndarray:
    """
    盒轮廓裁剪到图像后与目标区域的 IoU

    Args:
        boxes: 批量盒投影
        target: 目标凸区域，必须位于图像内
        image: 图像矩形

    Returns:
        np.ndarray: [0, 1]；盒不可见或目标退化时为 0
    """
    inter = intersection_area(boxes, target)
    area = clipped_area(boxes, image)
    union = area + target.area - inter
    iou = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    return np.where(boxes.visible & (target.area > 0.0), np.clip(iou, 0.0, 1.0), 0.0)
