"""融合目标：全局框在各存储视角下的投影轮廓与候选投影凸包的平均 IoU"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .kernel import particle_fitness
from ..exceptions.fusion_exceptions import InvalidGeometryError
from ..geometry.projection import clip_to_image, project_box_hull
from ..geometry.silhouette import ConvexRegion
from ..models.box import Polygon2D, quaternion_to_rotation
from ..models.global_object import CandidateObservation


@dataclass(frozen=True, eq=False)
class ViewSet:
    """
    候选视角的预计算数据

    Note:
        - rotations / translations 为各视角的 cam_from_world
        - targets 为各候选框在自身视角下的投影凸包 β，已裁剪到图像范围
        - images 为各视角的图像矩形，粒子的投影轮廓裁剪到其中后再求 IoU
        - 候选自身不可见、完全位于图像外或凸包退化的视角，valid 为 False，其项恒为 0
    """

    rotations: np.ndarray
    translations: np.ndarray
    intrinsics: np.ndarray
    targets: ConvexRegion
    images: ConvexRegion
    valid: np.ndarray

    def __len__(self) -> int:
        return len(self.rotations)


def build_view_set(psi: Sequence[CandidateObservation]) -> ViewSet:
    """为候选列表预计算视角变换与目标凸包"""
    targets = []
    for candidate in psi:
        hull = clip_to_image(project_box_hull(candidate.intrinsics, candidate.cam_from_world,
                                              candidate.box_world), candidate.intrinsics)
        targets.append(Polygon2D(np.zeros((0, 2))) if hull is None else hull)
    region = ConvexRegion.from_polygons(targets)
    return ViewSet(rotations=np.array([c.cam_from_world.matrix for c in psi]).reshape(-1, 3, 3),
                   translations=np.array([c.cam_from_world.translation for c in psi]).reshape(-1, 3),
                   intrinsics=np.array([c.intrinsics.vector for c in psi]).reshape(-1, 4),
                   targets=region,
                   images=ConvexRegion.rectangle([c.intrinsics.width for c in psi],
                                                 [c.intrinsics.height for c in psi]),
                   valid=region.area > 0.0)


def batch_fitness(views: ViewSet, centers: np.ndarray, sizes: np.ndarray, rotation: np.ndarray,
                  min_size: float, floor: Optional[float] = None) -> np.ndarray:
    """
    批量计算粒子的适应度

    Args:
        views: 候选视角
        centers: (P, 3)
        sizes: (P, 3)
        rotation: (3, 3) 共享旋转矩阵
        min_size: 尺寸下限，任一分量不大于该值的粒子适应度为 -1
        floor: 可选的剪枝阈值

    Returns:
        np.ndarray: (P,)，各视角 IoU 的平均值；不可见的视角计 0

    Note:
        给定 floor 时，先用包围矩形求各粒子适应度的上界，再逐视角把上界替换为精确值；
        一旦剩余上界之和不超过 floor 即停止，返回不超过 floor 的上界。
        只关心是否超过 floor 的调用方结果不变
    """
    n_particles, n_views = len(centers), len(views)
    if n_views == 0:
        return np.zeros(n_particles)
    return particle_fitness(centers, sizes, views.rotations @ rotation, views.rotations, views.translations,
                            views.intrinsics, views.valid, views.targets, views.images, min_size,
                            -np.inf if floor is None else floor)


def fusion_objective(center: np.ndarray, size: np.ndarray, rotation: np.ndarray,
                     psi: Sequence[CandidateObservation]) -> float:
    """
    单个状态的融合目标值

    Args:
        center: 位置 p
        size: 尺寸 s
        rotation: wxyz 单位四元数
        psi: 候选列表

    Returns:
        float: [0, 1]

    Raises:
        InvalidGeometryError: 尺寸存在非正分量
    """
    size = np.asarray(size, dtype=np.float64)
    if np.any(size <= 0.0):
        raise InvalidGeometryError(f"包围盒尺寸必须为正：{size.tolist()}")
    matrix = quaternion_to_rotation(np.asarray(rotation, dtype=np.float64)).as_matrix()
    fitness = batch_fitness(build_view_set(psi), np.asarray(center, dtype=np.float64)[None],
                            size[None], matrix, 0.0)
    return float(fitness[0])
