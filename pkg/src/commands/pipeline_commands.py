"""run 与 bench 命令：把检测流送入流水线并报告耗时"""
import json
import logging
import resource
import sys
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from .command import Command
from ..config.loader import dump_config
from ..config.settings import RunConfig
from ..dataio.lineset import write_lineset
from ..dataio.simulator import simulate_stream
from ..dataio.stream_io import JsonLinesWriter, load_stream, write_snapshot
from ..exceptions.fusion_exceptions import ConfigError
from ..models.frame import FrameInput
from ..stream.pipeline import StreamPipeline
from ..utils.timing import LatencyHistogram

logger = logging.getLogger(__name__)


def peak_rss_mb() -> float:
    """进程峰值常驻内存（MB），Linux 下 ru_maxrss 以 KB 计"""
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    divisor = 1024.0 * 1024.0 if sys.platform == "darwin" else 1024.0
    return peak / divisor


def input_frames(config: RunConfig, input_path: Optional[Path], simulate: bool) -> Iterable[FrameInput]:
    """
    选择唯一的输入来源

    Raises:
        ConfigError: 同时或都未指定 --input 与 --simulate
    """
    if (input_path is None) == (not simulate):
        raise ConfigError("必须且只能指定 --input 与 --simulate 之一")
    if simulate:
        return simulate_stream(config)[1]
    return load_stream(input_path)


def stream_through(pipeline: StreamPipeline, frames: Iterable[FrameInput],
                   events: Optional[JsonLinesWriter] = None) -> Dict[str, Any]:
    """
    逐帧处理并统计单帧耗时

    Returns:
        Dict[str, Any]: 帧数、关键帧数、物体数、耗时分位数、FPS 与峰值内存
    """
    latency = LatencyHistogram()
    start = time.perf_counter()
    for frame in frames:
        tick = time.perf_counter()
        event = pipeline.process_frame(frame)
        latency.record(time.perf_counter() - tick)
        if events is not None:
            events.write(event.to_dict())
    elapsed = time.perf_counter() - start
    stats = pipeline.state.stats
    return {
        "frames": stats.frames_seen,
        "keyframes": stats.keyframes,
        "objects": len(pipeline.state.objects),
        "latency_ms": latency.to_dict(),
        "fps": stats.frames_seen / elapsed if elapsed > 0 else 0.0,
        "peak_rss_mb": peak_rss_mb(),
        "pipeline": stats.to_dict(),
    }


class RunCommand(Command):
    """处理检测流，写出场景快照、事件日志与统计"""

    name = "run"

    def __init__(self, config: RunConfig, input_path: Optional[Path] = None, simulate: bool = False,
                 snapshot: Optional[Path] = None, events: Optional[Path] = None,
                 stats: Optional[Path] = None, effective_config: Optional[Path] = None,
                 lineset: Optional[Path] = None):
        """
        初始化运行命令

        Args:
            config: 有效配置
            input_path: 检测流文件
            simulate: 使用仿真器按配置生成检测流
            snapshot: 快照输出路径
            events: 逐帧事件日志路径
            stats: 统计报告路径
            effective_config: 有效配置输出路径，可作为 --config 复现本次运行
            lineset: OBJ 线框输出路径

        Note:
            所有输出只写到显式给出的路径
        """
        self.config = config
        self.input_path = input_path
        self.simulate = simulate
        self.snapshot = snapshot
        self.events = events
        self.stats = stats
        self.effective_config = effective_config
        self.lineset = lineset
        self.report: Dict[str, Any] = {}

    def run(self) -> None:
        frames = input_frames(self.config, self.input_path, self.simulate)
        if self.effective_config is not None:
            Path(self.effective_config).write_text(dump_config(self.config) + "\n", encoding="utf-8")
        pipeline = StreamPipeline(self.config)
        if self.events is not None:
            with JsonLinesWriter(self.events) as writer:
                self.report = stream_through(pipeline, frames, writer)
        else:
            self.report = stream_through(pipeline, frames)

        snapshot = pipeline.export_scene()
        if self.snapshot is not None:
            write_snapshot(snapshot, self.snapshot)
        if self.lineset is not None:
            write_lineset(snapshot, self.lineset)
        if self.stats is not None:
            Path(self.stats).write_text(json.dumps(self.report, indent=2) + "\n", encoding="utf-8")
        latency = self.report["latency_ms"]
        logger.info("运行完成：%d 帧，%d 个关键帧，%d 个物体",
                    self.report["frames"], self.report["keyframes"], self.report["objects"])
        print(f"帧数 {self.report['frames']}，关键帧 {self.report['keyframes']}，"
              f"物体 {self.report['objects']}，单帧耗时 p50 {latency['p50_ms']:.2f} ms / "
              f"p95 {latency['p95_ms']:.2f} ms")


class BenchCommand(Command):
    """重复处理同一检测流，报告耗时与吞吐"""

    name = "bench"

    def __init__(self, config: RunConfig, input_path: Optional[Path] = None, simulate: bool = False,
                 repeat: int = 1, report: Optional[Path] = None):
        self.config = config
        self.input_path = input_path
        self.simulate = simulate
        self.repeat = repeat
        self.report_path = report
        self.report: Dict[str, Any] = {}

    def run(self) -> None:
        if self.repeat < 1:
            raise ConfigError(f"--repeat 至少为 1，实际为 {self.repeat}")
        frames: List[FrameInput] = list(input_frames(self.config, self.input_path, self.simulate))
        runs = [stream_through(StreamPipeline(self.config), frames) for _ in range(self.repeat)]
        self.report = {
            "repeat": self.repeat,
            "frames": runs[-1]["frames"],
            "keyframes": runs[-1]["keyframes"],
            "objects": runs[-1]["objects"],
            "p50_ms": [r["latency_ms"]["p50_ms"] for r in runs],
            "p95_ms": [r["latency_ms"]["p95_ms"] for r in runs],
            "fps": [r["fps"] for r in runs],
            "stage_times": runs[-1]["pipeline"]["stage_times"],
            "peak_rss_mb": peak_rss_mb(),
        }
        text = json.dumps(self.report, indent=2)
        if self.report_path is not None:
            Path(self.report_path).write_text(text + "\n", encoding="utf-8")
        print(text)
