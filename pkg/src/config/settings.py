"""运行配置：各模块参数的 pydantic 模型，字段名在所有分组之间唯一"""
import math
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class AssociationConfig(_Section):
    """空间关联与对应关联的阈值"""

    tau_3d: float = Field(0.3, gt=0.0, lt=1.0, description="三维 IoU 抑制阈值")
    tau_2d: float = Field(0.5, gt=0.0, lt=1.0, description="投影凸包 IoU 关联阈值")
    tau_r: float = Field(math.radians(15.0), gt=0.0, lt=math.pi, description="视角方向差异阈值（弧度）")
    tau_t: float = Field(0.3, gt=0.0, description="相机平移差异阈值（米）")
    o_n: int = Field(2048, ge=1, description="蒙特卡罗 IoU 采样点数")
    n_cand_max: int = Field(24, ge=1, description="候选列表容量上限")
    enable_spatial: bool = Field(True, description="是否启用空间关联（三维 NMS）")
    enable_correspondence: bool = Field(True, description="是否启用二维对应关联")


class FusionConfig(_Section):
    """多视角融合（粒子滤波随机优化）参数"""

    n_pst: int = Field(1024, ge=2, description="粒子模板大小 N_pst")
    k_max: int = Field(30, ge=1, description="最大迭代次数")
    sigma_init_pos: float = Field(0.15, gt=0.0, description="位置初始搜索尺度（相对候选平均边长）")
    sigma_init_size: float = Field(0.15, gt=0.0, description="尺寸初始搜索尺度（相对初始尺寸）")
    shrink: float = Field(0.5, gt=0.0, lt=1.0, description="优势集为空时的收缩系数")
    min_sigma: float = Field(1e-3, gt=0.0, description="搜索尺度收敛阈值（米）")
    epsilon_f: float = Field(1e-3, gt=0.0, description="适应度改进收敛阈值")
    tau_box: int = Field(3, ge=1, description="触发融合的最少候选数")
    xi: float = Field(1.0, gt=0.0, description="softmax 选择的温度")
    min_size: float = Field(0.01, gt=0.0, description="粒子尺寸下限（米）")
    selection: Literal["argmax", "softmax"] = Field("argmax", description="优势集中的选择方式")
    strategy: Literal["pfo", "average", "best_score", "none"] = Field("pfo", description="融合策略")


class KeyframeConfig(_Section):
    """关键帧选择规则"""

    theta_kf: float = Field(math.radians(10.0), gt=0.0, description="关键帧旋转阈值（弧度）")
    d_kf: float = Field(0.1, gt=0.0, description="关键帧平移阈值（米）")


class EvalConfig(_Section):
    """类别无关 AP 评估参数"""

    iou_thresholds: List[float] = Field(default_factory=lambda: [0.15, 0.25, 0.5],
                                        description="IoU 阈值（升序）")
    mode: Literal["oriented", "axis_aligned"] = Field("oriented", description="IoU 计算方式")
    iou_backend: Literal["exact", "monte_carlo"] = Field("exact", description="有向模式的 IoU 后端")
    eval_samples: int = Field(8192, ge=1, description="蒙特卡罗后端采样点数")

    @field_validator("iou_thresholds")
    @classmethod
    def _check_thresholds(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("至少需要一个 IoU 阈值")
        if any(not 0.0 < t < 1.0 for t in value):
            raise ValueError("IoU 阈值必须位于 (0, 1)")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("IoU 阈值必须严格升序")
        return value


class NoiseModel(_Section):
    """仿真提议框的噪声模型"""

    center_sigma_rel: float = Field(0.05, ge=0.0, description="中心噪声（相对平均边长，沿视线放大 3 倍）")
    scale_sigma: float = Field(0.15, ge=0.0, description="对数正态深度尺度噪声（中心与尺寸同乘）")
    shape_sigma: float = Field(0.03, ge=0.0, description="各维独立的对数正态尺寸残差")
    rot_jitter: float = Field(0.05, ge=0.0, description="绕重力轴的旋转抖动上限（弧度）")
    dropout_p: float = Field(0.1, ge=0.0, le=1.0, description="漏检概率")
    score_base: float = Field(0.8, ge=0.0, description="置信度基准值")
    score_noise: float = Field(0.1, ge=0.0, description="置信度噪声")
    feature_noise: float = Field(0.1, ge=0.0, description="语义特征噪声")

    @classmethod
    def zero(cls) -> "NoiseModel":
        """无噪声、无漏检"""
        return cls(center_sigma_rel=0.0, scale_sigma=0.0, shape_sigma=0.0, rot_jitter=0.0, dropout_p=0.0,
                   score_noise=0.0, feature_noise=0.0)


class SimulatorConfig(_Section):
    """仿真场景与相机轨迹"""

    n_objects: int = Field(20, ge=1, description="真值物体数量")
    n_frames: int = Field(120, ge=1, description="轨迹帧数")
    pattern: Literal["orbit", "lawnmower"] = Field("orbit", description="轨迹模式")
    room: Tuple[float, float, float] = Field((6.0, 6.0, 3.0), description="房间尺寸（米）")
    image_width: int = Field(640, ge=2, description="图像宽度（像素）")
    image_height: int = Field(480, ge=2, description="图像高度（像素）")
    focal: float = Field(500.0, gt=0.0, description="焦距（像素）")
    feature_dim: int = Field(0, ge=0, description="语义特征维度，0 表示不生成")
    frame_rate: float = Field(10.0, gt=0.0, description="时间戳帧率（Hz）")

    @field_validator("room")
    @classmethod
    def _check_room(cls, value):
        if any(v <= 0 for v in value):
            raise ValueError("房间尺寸必须为正")
        return value


class RunConfig(_Section):
    """一次运行的完整有效配置"""

    seed: int = Field(0, ge=0, description="全局随机种子")
    association: AssociationConfig = Field(default_factory=AssociationConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    keyframe: KeyframeConfig = Field(default_factory=KeyframeConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)


SECTIONS = ("association", "fusion", "keyframe", "evaluation", "noise", "simulator")
