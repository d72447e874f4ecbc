"""桌面尺度仿真：非重叠真值场景、相机轨迹与带噪声的单视角提议"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from ..config.settings import NoiseModel, RunConfig
from ..exceptions.fusion_exceptions import PlacementError
from ..geometry.iou3d import clip_box_to_halfspaces, exact_iou_3d
from ..geometry.projection import Z_NEAR, project_points
from ..geometry.transforms import box_corners, transform_box
from ..models.box import Intrinsics, OrientedBox3D, Pose
from ..models.frame import FrameInput, ProposalInput
from ..models.scene_state import GroundTruthObject
from ..semantics.features import TextQuery
from ..utils.random_streams import philox_generator

logger = logging.getLogger(__name__)

FURNITURE_FRACTION = 0.4
FURNITURE_SIZE = (0.4, 2.0)
# 家具高度上限低于相机轨迹的最低高度
FURNITURE_HEIGHT = (0.4, 1.0)
SMALL_SIZE = (0.03, 0.3)
SURFACE_GAP = 1e-3
VISIBLE_DEPTH = (0.3, 6.0)
ALONG_RAY_SCALE = 3.0
MAX_PLACEMENT_ATTEMPTS = 500
# 环绕半径（相对房间短边）、高度 (基准, 振幅) 与注视点
ORBIT_RADIUS = 0.45
ORBIT_HEIGHT = (1.6, 0.2)
ORBIT_TARGET = (0.0, 0.0, 0.6)

# 随机子流编号
_SCENE_STREAM = 1
_TRAJECTORY_STREAM = 2
_PROPOSAL_STREAM = 3


@dataclass(frozen=True, eq=False)
class SimScene:
    """
    仿真场景

    Note:
        房间在 xy 方向以原点为中心，z 方向从地面 0 到层高；prototypes 为各物体的语义原型
    """

    gt_objects: Tuple[GroundTruthObject, ...]
    room: Tuple[float, float, float]
    seed: int
    prototypes: Optional[np.ndarray] = None

    def label_bank(self) -> List[TextQuery]:
        """每个真值物体的原型作为一个标签 object_<id>"""
        if self.prototypes is None:
            return []
        return [TextQuery(f"object_{obj.id}", self.prototypes[i]) for i, obj in enumerate(self.gt_objects)]


def _yaw_box(center, size, yaw: float) -> OrientedBox3D:
    return OrientedBox3D.from_rotation(center, size, Rotation.from_euler("z", yaw))


def _overlaps(box: OrientedBox3D, placed: Sequence[OrientedBox3D]) -> bool:
    return any(exact_iou_3d(box, other) > 0.0 for other in placed)


def _place_furniture(rng: np.random.Generator, room: Tuple[float, float, float],
                     placed: List[OrientedBox3D]) -> OrientedBox3D:
    lx, ly, lz = room
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        l, w = rng.uniform(*FURNITURE_SIZE, size=2)
        h = rng.uniform(FURNITURE_HEIGHT[0], min(FURNITURE_HEIGHT[1], lz))
        yaw = rng.uniform(0.0, math.pi)
        ex = abs(math.cos(yaw)) * l / 2 + abs(math.sin(yaw)) * w / 2
        ey = abs(math.sin(yaw)) * l / 2 + abs(math.cos(yaw)) * w / 2
        if 2 * ex >= lx or 2 * ey >= ly:
            continue
        x = rng.uniform(-lx / 2 + ex, lx / 2 - ex)
        y = rng.uniform(-ly / 2 + ey, ly / 2 - ey)
        box = _yaw_box((x, y, h / 2), (l, w, h), yaw)
        if not _overlaps(box, placed):
            return box
    raise PlacementError(f"{MAX_PLACEMENT_ATTEMPTS} 次尝试后仍无法放置家具")


def _place_small(rng: np.random.Generator, room: Tuple[float, float, float],
                 furniture: Sequence[OrientedBox3D], placed: List[OrientedBox3D]) -> OrientedBox3D:
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        parent = furniture[int(rng.integers(len(furniture)))]
        size = rng.uniform(*SMALL_SIZE, size=3)
        top = parent.center[2] + parent.size[2] / 2
        if top + SURFACE_GAP + size[2] > room[2]:
            continue
        slack = (parent.size[:2] - size[:2]) / 2
        offset = rng.uniform(-slack, slack)
        local = np.array([offset[0], offset[1], 0.0])
        center = parent.center + parent.matrix @ local
        center[2] = top + SURFACE_GAP + size[2] / 2
        box = OrientedBox3D(center, size, parent.rotation)
        if not _overlaps(box, placed):
            return box
    raise PlacementError(f"{MAX_PLACEMENT_ATTEMPTS} 次尝试后仍无法放置小物体")


def simulate_scene(seed: int, n_objects: int, room: Tuple[float, float, float] = (6.0, 6.0, 3.0),
                   feature_dim: int = 0) -> SimScene:
    """
    生成两两不重叠的真值场景

    Args:
        seed: 随机种子
        n_objects: 物体数，至少为 1
        room: 房间尺寸 (Lx, Ly, Lz)
        feature_dim: 语义原型维度，0 表示不生成

    Returns:
        SimScene: 约 40% 为放在地面上的家具（长宽 0.4–2.0 m、高 0.4–1.0 m，仅绕 z 轴旋转），
        其余为放在家具顶面上的小物体（0.03–0.3 m）

    Raises:
        ValueError: n_objects 小于 1
        PlacementError: 重试上限内无法放置
    """
    if n_objects < 1:
        raise ValueError(f"物体数至少为 1，实际为 {n_objects}")
    rng = philox_generator(seed, _SCENE_STREAM)
    n_furniture = max(1, int(round(FURNITURE_FRACTION * n_objects)))
    placed: List[OrientedBox3D] = []
    for _ in range(n_furniture):
        placed.append(_place_furniture(rng, room, placed))
    furniture = list(placed)
    for _ in range(n_objects - n_furniture):
        placed.append(_place_small(rng, room, furniture, placed))

    prototypes = None
    if feature_dim > 0:
        raw = rng.normal(size=(n_objects, feature_dim))
        prototypes = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        prototypes.setflags(write=False)
    logger.info("仿真场景：%d 个家具，%d 个小物体", n_furniture, n_objects - n_furniture)
    objects = tuple(GroundTruthObject(i, box) for i, box in enumerate(placed))
    return SimScene(objects, tuple(room), seed, prototypes)


def look_at(eye: np.ndarray, target: np.ndarray) -> Pose:
    """
    构造朝向目标点的 world-from-camera 位姿（世界 z 轴向上）

    Note:
        right = forward × up，down = forward × right，旋转矩阵的列为 (right, down, forward)
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return Pose.from_matrix(np.stack([right, down, forward], axis=1), eye)


def simulate_trajectory(scene: SimScene, n_frames: int, pattern: str = "orbit", seed: int = 0) -> List[Pose]:
    """
    生成平滑的相机轨迹

    Args:
        scene: 仿真场景
        n_frames: 帧数，至少为 1
        pattern: orbit（绕房间中心环绕，首尾相接）或 lawnmower（往返扫描）
        seed: 随机种子（决定环绕的起始相位）

    Returns:
        List[Pose]: 相机位姿；orbit 高度 1.4–1.8 m，lawnmower 高度 1.5 m
    """
    if n_frames < 1:
        raise ValueError(f"帧数至少为 1，实际为 {n_frames}")
    lx, ly, _ = scene.room
    target = np.array(ORBIT_TARGET)
    poses = []
    if pattern == "orbit":
        radius = ORBIT_RADIUS * min(lx, ly)
        phase = philox_generator(seed, _TRAJECTORY_STREAM).uniform(0.0, 2 * math.pi)
        for k in range(n_frames):
            theta = phase + 2 * math.pi * k / n_frames
            eye = np.array([radius * math.cos(theta), radius * math.sin(theta),
                            ORBIT_HEIGHT[0] + ORBIT_HEIGHT[1] * math.sin(2 * theta)])
            poses.append(look_at(eye, target))
        return poses
    if pattern != "lawnmower":
        raise ValueError(f"未知轨迹模式：{pattern}")
    # 三行往返扫描房间的 -y 半侧，视线固定朝 +y 并向下倾斜
    rows = [-0.4 * ly, -0.25 * ly, -0.1 * ly]
    waypoints = []
    for i, y in enumerate(rows):
        xs = (-0.35 * lx, 0.35 * lx) if i % 2 == 0 else (0.35 * lx, -0.35 * lx)
        waypoints += [(xs[0], y), (xs[1], y)]
    waypoints = np.array(waypoints)
    seg = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(seg)])
    for k in range(n_frames):
        s = cumulative[-1] * (k / max(n_frames - 1, 1))
        i = min(int(np.searchsorted(cumulative, s, side="right")) - 1, len(seg) - 1)
        t = (s - cumulative[i]) / seg[i]
        xy = waypoints[i] + t * (waypoints[i + 1] - waypoints[i])
        eye = np.array([xy[0], xy[1], 1.5])
        poses.append(look_at(eye, eye + np.array([0.0, 1.0, -0.45])))
    return poses


def _frustum_halfspaces(intrinsics: Intrinsics) -> Tuple[np.ndarray, np.ndarray]:
    """相机坐标系下图像视锥的 5 个半空间 n·p ≤ d"""
    fx, fy, cx, cy = intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy
    w, h = intrinsics.width, intrinsics.height
    normals = np.array([[-fx, 0.0, -cx], [fx, 0.0, cx - w], [0.0, -fy, -cy], [0.0, fy, cy - h],
                        [0.0, 0.0, -1.0]])
    offsets = np.array([0.0, 0.0, 0.0, 0.0, -Z_NEAR])
    return normals, offsets


def truncate_to_frustum(box_cam: OrientedBox3D, intrinsics: Intrinsics) -> OrientedBox3D:
    """
    把相机坐标系下的包围盒收缩到视锥内可见部分在盒自身坐标轴上的跨度

    Returns:
        OrientedBox3D: 完全可见时原样返回
    """
    normals, offsets = _frustum_halfspaces(intrinsics)
    corners = box_corners(box_cam)
    if np.all(corners @ normals.T <= offsets):
        return box_cam
    vertices = clip_box_to_halfspaces(box_cam, normals, offsets)
    if len(vertices) == 0:
        return box_cam
    local = (vertices - box_cam.center) @ box_cam.matrix
    low, high = local.min(axis=0), local.max(axis=0)
    size = np.maximum(high - low, 1e-6)
    center = box_cam.center + box_cam.matrix @ ((low + high) / 2)
    return box_cam.with_center_size(center, size)


def simulate_proposals(scene: SimScene, pose: Pose, intrinsics: Intrinsics, noise: NoiseModel,
                       seed: int, frame_id: int, timestamp: float = 0.0) -> FrameInput:
    """
    模拟单视角检测器在一帧中的输出

    Args:
        scene: 仿真场景
        pose: world-from-camera 位姿
        intrinsics: 相机内参
        noise: 噪声模型
        seed: 随机种子
        frame_id: 帧号（同时作为随机子流编号）
        timestamp: 时间戳（秒）

    Returns:
        FrameInput: 相机坐标系下的提议框，provenance 记录对应的真值编号

    Note:
        - 中心深度在 [0.3, 6] m、中心投影在图像内且未被随机漏检的物体才产生提议
        - 超出视锥的维度收缩到可见跨度
        - 尺度不确定性：中心与尺寸同乘对数正态的深度因子，盒沿视线滑动而投影不变
        - 中心噪声尺度为 center_sigma_rel × 平均边长，沿视线分量放大 3 倍；
          各维尺寸再乘以 shape_sigma 的对数正态残差；旋转绕重力轴抖动
    """
    rng = philox_generator(seed, _PROPOSAL_STREAM, frame_id)
    cam_from_world = pose.inverse()
    gravity_cam = cam_from_world.matrix @ np.array([0.0, 0.0, 1.0])
    proposals, provenance = [], []
    for index, obj in enumerate(scene.gt_objects):
        center_cam = cam_from_world.apply(obj.box.center)
        depth = center_cam[2]
        if not VISIBLE_DEPTH[0] <= depth <= VISIBLE_DEPTH[1]:
            continue
        u, v = project_points(intrinsics, center_cam)
        if not (0.0 <= u < intrinsics.width and 0.0 <= v < intrinsics.height):
            continue
        if rng.random() < noise.dropout_p:
            continue

        box = truncate_to_frustum(transform_box(cam_from_world, obj.box), intrinsics)
        center, size = box.center, box.size
        if noise.scale_sigma > 0.0:
            depth_scale = math.exp(rng.normal(0.0, noise.scale_sigma))
            center, size = center * depth_scale, size * depth_scale
        if noise.center_sigma_rel > 0.0:
            shift = rng.normal(0.0, noise.center_sigma_rel * float(np.mean(size)), size=3)
            ray = center / np.linalg.norm(center)
            shift = shift + (ALONG_RAY_SCALE - 1.0) * np.dot(shift, ray) * ray
            center = center + shift
        if noise.shape_sigma > 0.0:
            size = size * np.exp(rng.normal(0.0, noise.shape_sigma, size=3))
        box = box.with_center_size(center, size)
        if noise.rot_jitter > 0.0:
            angle = rng.uniform(-noise.rot_jitter, noise.rot_jitter)
            box = OrientedBox3D.from_rotation(box.center, box.size,
                                              Rotation.from_rotvec(angle * gravity_cam) * box.scipy_rotation)

        score = noise.score_base
        if noise.score_noise > 0.0:
            score += rng.normal(0.0, noise.score_noise)
        feature = None
        if scene.prototypes is not None:
            feature = scene.prototypes[index]
            if noise.feature_noise > 0.0:
                feature = feature + rng.normal(0.0, noise.feature_noise, size=feature.shape)
                feature = feature / np.linalg.norm(feature)
        proposals.append(ProposalInput(box, float(np.clip(score, 0.0, 1.0)), feature))
        provenance.append(obj.id)
    return FrameInput(frame_id=frame_id, timestamp=timestamp, intrinsics=intrinsics,
                      world_from_cam=pose, proposals=tuple(proposals), provenance=tuple(provenance))


def simulator_intrinsics(config: RunConfig) -> Intrinsics:
    sim = config.simulator
    return Intrinsics(sim.focal, sim.focal, sim.image_width / 2, sim.image_height / 2,
                      sim.image_width, sim.image_height)


def simulate_stream(config: RunConfig) -> Tuple[SimScene, List[FrameInput]]:
    """
    按运行配置生成场景与完整检测流

    Returns:
        Tuple[SimScene, List[FrameInput]]: 仿真场景与逐帧输入
    """
    sim = config.simulator
    scene = simulate_scene(config.seed, sim.n_objects, sim.room, sim.feature_dim)
    poses = simulate_trajectory(scene, sim.n_frames, sim.pattern, config.seed)
    intrinsics = simulator_intrinsics(config)
    frames = [simulate_proposals(scene, pose, intrinsics, config.noise, config.seed, k, k / sim.frame_rate)
              for k, pose in enumerate(poses)]
    return scene, frames
