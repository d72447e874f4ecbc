from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..exceptions.fusion_exceptions import InvalidGeometryError

QUATERNION_TOLERANCE = 1e-6


def _frozen_vector(values: Iterable[float], length: int, name: str) -> np.ndarray:
    """复制为只读 float64 向量并检查长度与有限性"""
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape != (length,):
        raise InvalidGeometryError(f"{name} 必须包含 {length} 个分量，实际为 {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometryError(f"{name} 含有非有限值")
    arr.setflags(write=False)
    return arr


def _checked_quaternion(values: Iterable[float]) -> np.ndarray:
    quat = _frozen_vector(values, 4, "quaternion")
    norm = float(np.linalg.norm(quat))
    if abs(norm - 1.0) > QUATERNION_TOLERANCE:
        raise InvalidGeometryError(f"四元数必须为单位长度，实际范数为 {norm:.9f}")
    return quat


def quaternion_to_rotation(quat_wxyz: np.ndarray) -> Rotation:
    """wxyz 四元数转换为 scipy Rotation"""
    w, x, y, z = quat_wxyz
    return Rotation.from_quat([x, y, z, w])


def rotation_to_quaternion(rotation: Rotation) -> np.ndarray:
    """scipy Rotation 转换为 wxyz 四元数"""
    x, y, z, w = rotation.as_quat()
    return np.array([w, x, y, z], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Pose:
    """刚体变换，rotation 为 wxyz 单位四元数，translation 单位为米

    作为相机位姿使用时约定为 world-from-camera：把相机坐标系的点映射到世界坐标系。
    相机坐标系采用 x 向右、y 向下、z 向前。
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _checked_quaternion(self.rotation))
        object.__setattr__(self, "translation", _frozen_vector(self.translation, 3, "translation"))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_rotation(cls, rotation: Rotation, translation: Iterable[float]) -> "Pose":
        return cls(rotation_to_quaternion(rotation), translation)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, translation: Iterable[float]) -> "Pose":
        return cls.from_rotation(Rotation.from_matrix(matrix), translation)

    @cached_property
    def scipy_rotation(self) -> Rotation:
        return quaternion_to_rotation(self.rotation)

    @cached_property
    def matrix(self) -> np.ndarray:
        """3×3 旋转矩阵"""
        mat = self.scipy_rotation.as_matrix()
        mat.setflags(write=False)
        return mat

    def inverse(self) -> "Pose":
        """
        求逆变换

        Returns:
            Pose: 满足 inverse().compose(self) 为单位变换
        """
        return Pose.from_rotation(self.scipy_rotation.inv(), -(self.matrix.T @ self.translation))

    def compose(self, other: "Pose") -> "Pose":
        """
        复合变换 self∘other（先应用 other 再应用 self）

        Args:
            other: 右侧变换

        Returns:
            Pose: 复合后的变换
        """
        return Pose.from_rotation(self.scipy_rotation * other.scipy_rotation,
                                  self.matrix @ other.translation + self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """对形状为 (..., 3) 的点集应用变换"""
        return np.asarray(points, dtype=np.float64) @ self.matrix.T + self.translation

    @property
    def viewing_direction(self) -> np.ndarray:
        """相机 +z 轴在目标坐标系中的方向"""
        return self.matrix[:, 2]


@dataclass(frozen=True)
class Intrinsics:
    """针孔相机内参，单位为像素"""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidGeometryError(f"焦距必须为正：fx={self.fx}, fy={self.fy}")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise InvalidGeometryError(
                f"主点 ({self.cx}, {self.cy}) 必须位于图像 {self.width}x{self.height} 内部")

    @property
    def vector(self) -> np.ndarray:
        """(fx, fy, cx, cy)"""
        return np.array([self.fx, self.fy, self.cx, self.cy], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class OrientedBox3D:
    """
    有向三维包围盒

    Note:
        - center 为中心点 p，size 为完整边长 (l, w, h)，均以米为单位
        - rotation 为 wxyz 单位四元数，是旋转的规范存储形式，文件读写按位保持
    """

    center: np.ndarray
    size: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen_vector(self.center, 3, "center"))
        object.__setattr__(self, "size", _frozen_vector(self.size, 3, "size"))
        object.__setattr__(self, "rotation", _checked_quaternion(self.rotation))
        if not np.all(self.size > 0):
            raise InvalidGeometryError(f"包围盒尺寸必须为正：{self.size.tolist()}")

    @classmethod
    def axis_aligned(cls, center: Iterable[float], size: Iterable[float]) -> "OrientedBox3D":
        return cls(center, size, np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_rotation(cls, center: Iterable[float], size: Iterable[float],
                      rotation: Rotation) -> "OrientedBox3D":
        return cls(center, size, rotation_to_quaternion(rotation))

    @cached_property
    def scipy_rotation(self) -> Rotation:
        return quaternion_to_rotation(self.rotation)

    @cached_property
    def matrix(self) -> np.ndarray:
        mat = self.scipy_rotation.as_matrix()
        mat.setflags(write=False)
        return mat

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def with_center_size(self, center: Iterable[float], size: Iterable[float]) -> "OrientedBox3D":
        """保持旋转，替换中心与尺寸"""
        return OrientedBox3D(center, size, self.rotation)

    def is_close(self, other: "OrientedBox3D", atol: float = 1e-9) -> bool:
        """中心、尺寸与旋转矩阵均在容差内一致"""
        return (np.allclose(self.center, other.center, atol=atol)
                and np.allclose(self.size, other.size, atol=atol)
                and np.allclose(self.matrix, other.matrix, atol=atol))

    def bit_equal(self, other: "OrientedBox3D") -> bool:
        return (np.array_equal(self.center, other.center)
                and np.array_equal(self.size, other.size)
                and np.array_equal(self.rotation, other.rotation))


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """按逆时针排列的二维多边形，单位为像素"""

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=np.float64).reshape(-1, 2)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @cached_property
    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def is_degenerate(self) -> bool:
        """顶点不足三个或面积为零"""
        return len(self.vertices) < 3 or self.area <= 0.0

    def __len__(self) -> int:
        return len(self.vertices)


def optional_feature(values: Optional[Iterable[float]]) -> Optional[np.ndarray]:
    """把可选的特征转换为只读向量"""
    if values is None:
        return None
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr
