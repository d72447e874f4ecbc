import logging
from pathlib import Path
from typing import Optional

from .command import Command
from ..config.settings import RunConfig
from ..dataio.simulator import simulate_stream, simulator_intrinsics
from ..dataio.stream_io import write_groundtruth, write_label_bank, write_stream

logger = logging.getLogger(__name__)


class SimulateCommand(Command):
    """生成仿真检测流与真值文件"""

    name = "simulate"

    def __init__(self, config: RunConfig, stream: Path, groundtruth: Path, labels: Optional[Path] = None):
        """
        初始化仿真命令

        Args:
            config: 有效配置（场景、轨迹与噪声参数均来自其中）
            stream: 检测流输出路径
            groundtruth: 真值输出路径
            labels: 可选的标签库输出路径，需要 feature_dim > 0
        """
        self.config = config
        self.stream = stream
        self.groundtruth = groundtruth
        self.labels = labels

    def run(self) -> None:
        scene, frames = simulate_stream(self.config)
        feature_dim = self.config.simulator.feature_dim or None
        n_frames = write_stream(frames, self.stream, simulator_intrinsics(self.config), feature_dim)
        n_objects = write_groundtruth(scene.gt_objects, self.groundtruth)
        if self.labels is not None:
            if scene.prototypes is None:
                raise ValueError("写出标签库需要 --feature-dim 大于 0")
            write_label_bank(scene.label_bank(), self.labels)
        n_proposals = sum(len(f.proposals) for f in frames)
        logger.info("仿真完成：%d 帧，%d 个提议", n_frames, n_proposals)
        print(f"已写出 {n_frames} 帧（{n_proposals} 个提议）到 {self.stream}，"
              f"{n_objects} 个真值物体到 {self.groundtruth}")
