"""粒子适应度的编译内核：逐粒子、逐视角投影轮廓并计算与目标凸包的 IoU"""
import math

import numba as nb
import numpy as np

from ..geometry.projection import Z_NEAR
from ..geometry.silhouette import (_EDGE_ENDS, _EDGE_STARTS, _SILHOUETTE_EDGES, _SILHOUETTE_VALID, EDGE_TOLERANCE,
                                   MAX_SILHOUETTE_EDGES, ConvexRegion)
from ..geometry.transforms import UNIT_CORNERS


@nb.njit(cache=True)
def _clip_edges(starts, ends, count, normals, offsets, plane_count, origin, slack):
    """有向边落在半平面交内的部分对 ½∮(x dy − y dx) 的贡献"""
    total = 0.0
    for e in range(count):
        sx, sy = starts[e, 0], starts[e, 1]
        dx, dy = ends[e, 0] - sx, ends[e, 1] - sy
        if dx == 0.0 and dy == 0.0:
            continue
        t_lo, t_hi = 0.0, 1.0
        for j in range(plane_count):
            nx, ny = normals[j, 0], normals[j, 1]
            room = offsets[j] + slack - (sx * nx + sy * ny)
            rate = dx * nx + dy * ny
            if rate < 0.0:
                t_lo = max(t_lo, room / rate)
            elif rate > 0.0:
                t_hi = min(t_hi, room / rate)
            elif room < 0.0:
                t_hi = -1.0
            if t_hi <= t_lo:
                break
        if t_hi > t_lo:
            total += 0.5 * (t_hi - t_lo) * ((sx - origin[0]) * dy - (sy - origin[1]) * dx)
    return total


@nb.njit(cache=True)
def _intersection(box_starts, box_ends, box_normals, box_offsets, count,
                  starts, ends, normals, offsets, origin, tolerance):
    """盒轮廓与凸区域的交集面积：两侧边界各自落在对方内部的部分之和"""
    inside_region = _clip_edges(box_starts, box_ends, count, normals, offsets, normals.shape[0],
                                origin, tolerance)
    inside_box = _clip_edges(starts, ends, starts.shape[0], box_normals, box_offsets, count,
                             origin, -tolerance)
    return max(inside_region + inside_box, 0.0)


@nb.njit(cache=True)
def _ratio(inter, area, target_area):
    union = area + target_area - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


@nb.njit(cache=True)
def _particle_fitness(center, size, rot_cam, cam_rot, cam_t, intrinsics, valid,
                      t_starts, t_ends, t_normals, t_offsets, t_origin, t_area, t_lower, t_upper,
                      i_starts, i_ends, i_normals, i_offsets, i_origin, i_upper,
                      min_size, floor, unit, sil_edges, sil_valid, edge_starts, edge_ends, z_near, tolerance):
    for k in range(3):
        if size[k] <= min_size:
            return -1.0
    n_views = rot_cam.shape[0]
    n_edges = sil_edges.shape[1]
    uv = np.empty((8, 2))
    box_starts = np.empty((n_views, n_edges, 2))
    box_ends = np.empty((n_views, n_edges, 2))
    box_normals = np.empty((n_views, n_edges, 2))
    box_offsets = np.empty((n_views, n_edges))
    counts = np.zeros(n_views, dtype=np.int64)
    areas = np.zeros(n_views)
    bounds = np.zeros(n_views)
    active = np.zeros(n_views, dtype=np.bool_)
    lower = np.empty(2)
    upper = np.empty(2)
    camera = np.empty(3)
    corner = np.empty(3)

    for v in range(n_views):
        if not valid[v]:
            continue
        for i in range(3):
            camera[i] = cam_t[v, i]
            for j in range(3):
                camera[i] += cam_rot[v, i, j] * center[j]
        visible = True
        for c in range(8):
            for i in range(3):
                corner[i] = camera[i]
                for j in range(3):
                    corner[i] += rot_cam[v, i, j] * unit[c, j] * size[j]
            if corner[2] < z_near:
                visible = False
                break
            uv[c, 0] = intrinsics[v, 0] * corner[0] / corner[2] + intrinsics[v, 2]
            uv[c, 1] = intrinsics[v, 1] * corner[1] / corner[2] + intrinsics[v, 3]
        if not visible:
            continue
        depth = max(camera[2], z_near)
        cu = intrinsics[v, 0] * camera[0] / depth + intrinsics[v, 2]
        cv = intrinsics[v, 1] * camera[1] / depth + intrinsics[v, 3]

        code = 0
        for j in range(3):
            h = 0.0
            for i in range(3):
                h -= camera[i] * rot_cam[v, i, j]
            half = size[j] / 2.0
            state = 1
            if h > half:
                state = 2
            elif h < -half:
                state = 0
            code = code * 3 + state

        area = 0.0
        m = 0
        for e in range(n_edges):
            if not sil_valid[code, e]:
                continue
            a = edge_starts[sil_edges[code, e]]
            b = edge_ends[sil_edges[code, e]]
            ax, ay, bx, by = uv[a, 0], uv[a, 1], uv[b, 0], uv[b, 1]
            if (bx - ax) * (cv - ay) - (by - ay) * (cu - ax) < 0.0:
                ax, ay, bx, by = bx, by, ax, ay
            box_starts[v, m, 0], box_starts[v, m, 1] = ax, ay
            box_ends[v, m, 0], box_ends[v, m, 1] = bx, by
            dx, dy = bx - ax, by - ay
            length = math.sqrt(dx * dx + dy * dy)
            if length > 0.0:
                box_normals[v, m, 0], box_normals[v, m, 1] = dy / length, -dx / length
                box_offsets[v, m] = (dy * ax - dx * ay) / length
            else:
                box_normals[v, m, 0], box_normals[v, m, 1] = 0.0, 0.0
                box_offsets[v, m] = math.inf
            area += 0.5 * ((ax - cu) * (by - cv) - (ay - cv) * (bx - cu))
            m += 1
        counts[v] = m

        lower[0], lower[1] = uv[0, 0], uv[0, 1]
        upper[0], upper[1] = uv[0, 0], uv[0, 1]
        for c in range(1, 8):
            for i in range(2):
                lower[i] = min(lower[i], uv[c, i])
                upper[i] = max(upper[i], uv[c, i])
        if lower[0] < 0.0 or lower[1] < 0.0 or upper[0] > i_upper[v, 0] or upper[1] > i_upper[v, 1]:
            area = _intersection(box_starts[v], box_ends[v], box_normals[v], box_offsets[v], m,
                                 i_starts[v], i_ends[v], i_normals[v], i_offsets[v], i_origin[v], tolerance)
        areas[v] = area
        active[v] = True
        overlap = 1.0
        for i in range(2):
            overlap *= max(min(upper[i], t_upper[v, i]) - max(lower[i], t_lower[v, i]), 0.0)
        bounds[v] = _ratio(min(overlap, area, t_area[v]), area, t_area[v])

    remaining = 0.0
    for v in range(n_views):
        remaining += bounds[v]
    if remaining <= floor * n_views:
        return min(remaining / n_views, floor)
    total = 0.0
    for v in range(n_views):
        if not active[v]:
            continue
        inter = _intersection(box_starts[v], box_ends[v], box_normals[v], box_offsets[v], counts[v],
                              t_starts[v], t_ends[v], t_normals[v], t_offsets[v], t_origin[v], tolerance)
        total += _ratio(inter, areas[v], t_area[v])
        remaining -= bounds[v]
        if total + remaining <= floor * n_views:
            return min((total + remaining) / n_views, floor)
    return total / n_views


@nb.njit(parallel=True, cache=True)
def _fitness(centers, sizes, rot_cam, cam_rot, cam_t, intrinsics, valid,
             t_starts, t_ends, t_normals, t_offsets, t_origin, t_area, t_lower, t_upper,
             i_starts, i_ends, i_normals, i_offsets, i_origin, i_upper,
             min_size, floor, unit, sil_edges, sil_valid, edge_starts, edge_ends, z_near, tolerance):
    fitness = np.empty(centers.shape[0])
    for p in nb.prange(centers.shape[0]):
        fitness[p] = _particle_fitness(centers[p], sizes[p], rot_cam, cam_rot, cam_t, intrinsics, valid,
                                       t_starts, t_ends, t_normals, t_offsets, t_origin, t_area, t_lower, t_upper,
                                       i_starts, i_ends, i_normals, i_offsets, i_origin, i_upper,
                                       min_size, floor, unit, sil_edges, sil_valid, edge_starts, edge_ends,
                                       z_near, tolerance)
    return fitness


def particle_fitness(centers: np.ndarray, sizes: np.ndarray, rotations_cam: np.ndarray, cam_rotations: np.ndarray,
                     cam_translations: np.ndarray, intrinsics: np.ndarray, valid: np.ndarray,
                     targets: ConvexRegion, images: ConvexRegion, min_size: float, floor: float) -> np.ndarray:
    """
    并行计算各粒子在全部视角上的平均轮廓 IoU

    Args:
        centers: (P, 3) 世界坐标系中心
        sizes: (P, 3)
        rotations_cam: (V, 3, 3) 各视角下的盒旋转 R_cam·R
        cam_rotations: (V, 3, 3) cam_from_world 旋转
        cam_translations: (V, 3) cam_from_world 平移
        intrinsics: (V, 4) 的 (fx, fy, cx, cy)
        valid: (V,) 目标凸包非退化的视角
        targets: 各视角的目标凸包，已裁剪到图像
        images: 各视角的图像矩形
        min_size: 尺寸下限，任一分量不大于该值的粒子返回 -1
        floor: 剪枝阈值，不剪枝时为 -inf

    Returns:
        np.ndarray: (P,)，与 silhouette_iou 逐视角求平均的结果一致；
        上界不超过 floor 的粒子返回不超过 floor 的上界
    """
    f64 = np.float64
    return _fitness(np.ascontiguousarray(centers, dtype=f64), np.ascontiguousarray(sizes, dtype=f64),
                    np.ascontiguousarray(rotations_cam, dtype=f64), np.ascontiguousarray(cam_rotations, dtype=f64),
                    np.ascontiguousarray(cam_translations, dtype=f64), np.ascontiguousarray(intrinsics, dtype=f64),
                    np.ascontiguousarray(valid, dtype=np.bool_),
                    targets.starts, targets.ends, targets.normals, targets.offsets, targets.origin,
                    targets.area, targets.lower, targets.upper,
                    images.starts, images.ends, images.normals, images.offsets, images.origin, images.upper,
                    float(min_size), float(floor), np.ascontiguousarray(UNIT_CORNERS),
                    np.ascontiguousarray(_SILHOUETTE_EDGES, dtype=np.int64),
                    np.ascontiguousarray(_SILHOUETTE_VALID), np.ascontiguousarray(_EDGE_STARTS, dtype=np.int64),
                    np.ascontiguousarray(_EDGE_ENDS, dtype=np.int64), float(Z_NEAR), float(EDGE_TOLERANCE))
