"""二维凸包与凸多边形裁剪、IoU"""
from typing import List, Sequence

import numpy as np

from ..models.box import Polygon2D

# 叉积容差（像素²）
CROSS_TOLERANCE = 1e-9


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def convex_hull(points: Sequence[Sequence[float]]) -> Polygon2D:
    """
    单调链算法求二维凸包

    Args:
        points: 至少一个二维点

    Returns:
        Polygon2D: 逆时针顶点，共线点被删除；全部共线时顶点少于 3 个，is_degenerate 为 True
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    if len(pts) <= 2:
        return Polygon2D(np.unique(pts, axis=0))

    lower: List[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= CROSS_TOLERANCE:
            lower.pop()
        lower.append(p)
    upper: List[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= CROSS_TOLERANCE:
            upper.pop()
        upper.append(p)
    return Polygon2D(np.array(lower[:-1] + upper[:-1]))


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """
    Sutherland–Hodgman 裁剪：求两个逆时针凸多边形的交

    Args:
        subject: (n, 2) 被裁剪多边形
        clip: (m, 2) 裁剪多边形，必须为凸且逆时针

    Returns:
        np.ndarray: (k, 2) 交集多边形顶点，无交集时 k = 0
    """
    output = [np.asarray(p, dtype=np.float64) for p in subject]
    cp1 = clip[-1]
    for cp2 in clip:
        if not output:
            break
        edge = cp2 - cp1

        def inside(p: np.ndarray) -> bool:
            return edge[0] * (p[1] - cp1[1]) - edge[1] * (p[0] - cp1[0]) >= 0.0

        def intersection(s: np.ndarray, e: np.ndarray) -> np.ndarray:
            d = e - s
            denom = edge[0] * d[1] - edge[1] * d[0]
            t = (edge[0] * (cp1[1] - s[1]) - edge[1] * (cp1[0] - s[0])) / denom
            return s + t * d

        candidates = output
        output = []
        s = candidates[-1]
        for e in candidates:
            if inside(e):
                if not inside(s):
                    output.append(intersection(s, e))
                output.append(e)
            elif inside(s):
                output.append(intersection(s, e))
            s = e
        cp1 = cp2
    return np.array(output, dtype=np.float64).reshape(-1, 2)


def hull_iou_2d(a: Polygon2D, b: Polygon2D) -> float:
    """
    两个凸包的二维 IoU

    Args:
        a: 逆时针凸多边形
        b: 逆时针凸多边形

    Returns:
        float: [0, 1]，任一输入退化时为 0
    """
    if a.is_degenerate or b.is_degenerate:
        return 0.0
    inter = Polygon2D(clip_convex(a.vertices, b.vertices)).area
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def rectangle(width: float, height: float) -> Polygon2D:
    """[0, width] × [0, height] 的逆时针矩形"""
    return Polygon2D([[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]])


def clip_to_rectangle(polygon: Polygon2D, width: float, height: float) -> Polygon2D:
    """把凸多边形裁剪到 [0, width] × [0, height]；完全位于矩形外时返回空多边形"""
    if polygon.is_degenerate:
        return polygon
    verts = polygon.vertices
    if verts.min() >= 0.0 and np.all(verts.max(axis=0) <= [width, height]):
        return polygon
    return Polygon2D(clip_convex(verts, rectangle(width, height).vertices))
