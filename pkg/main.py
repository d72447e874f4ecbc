#!/usr/bin/env python3
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.commands.command import Command
from src.commands.pipeline_commands import BenchCommand, RunCommand
from src.commands.query_commands import EvalCommand, RetrieveCommand
from src.commands.simulate_commands import SimulateCommand
from src.config.loader import add_config_arguments, dump_config, load_config, overrides_from_args
from src.exceptions.fusion_exceptions import BoxFusionError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _add_input_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", type=Path, help="检测流文件")
    parser.add_argument("--simulate", action="store_true", help="按配置生成仿真检测流")


def build_parser() -> argparse.ArgumentParser:
    """构建带子命令的参数解析器"""
    parser = argparse.ArgumentParser(prog="boxfusion", description="免重建的流式三维包围盒融合")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="处理检测流并写出场景快照")
    _add_input_arguments(run)
    run.add_argument("--snapshot", type=Path, help="场景快照输出路径")
    run.add_argument("--events", type=Path, help="逐帧事件日志输出路径")
    run.add_argument("--stats", type=Path, help="统计报告输出路径")
    run.add_argument("--effective-config", type=Path, help="有效配置输出路径")
    run.add_argument("--lineset", type=Path, help="OBJ 线框输出路径")

    simulate = subparsers.add_parser("simulate", help="生成仿真检测流与真值")
    simulate.add_argument("--stream", type=Path, required=True, help="检测流输出路径")
    simulate.add_argument("--groundtruth", type=Path, required=True, help="真值输出路径")
    simulate.add_argument("--labels", type=Path, help="标签库输出路径")

    evaluate = subparsers.add_parser("eval", help="评估场景快照的 AP")
    evaluate.add_argument("--snapshot", type=Path, required=True, help="场景快照文件")
    evaluate.add_argument("--groundtruth", type=Path, required=True, help="真值文件")
    evaluate.add_argument("--report", type=Path, help="评估报告输出路径")

    retrieve = subparsers.add_parser("retrieve", help="按文本嵌入检索物体")
    retrieve.add_argument("--snapshot", type=Path, required=True, help="场景快照文件")
    retrieve.add_argument("--queries", type=Path, required=True, help="查询嵌入文件（标签库格式）")
    retrieve.add_argument("--top-k", type=int, default=5, help="每个查询返回的物体数")
    retrieve.add_argument("--classify", action="store_true", help="把查询文件当作标签库为物体分类")

    bench = subparsers.add_parser("bench", help="测量单帧耗时与吞吐")
    _add_input_arguments(bench)
    bench.add_argument("--repeat", type=int, default=1, help="重复次数")
    bench.add_argument("--report", type=Path, help="报告输出路径")

    for sub in (run, simulate, evaluate, retrieve, bench):
        add_config_arguments(sub)
    return parser


def build_command(args: argparse.Namespace, config) -> Command:
    """根据子命令创建命令对象"""
    if args.command == "run":
        return RunCommand(config, args.input, args.simulate, args.snapshot, args.events, args.stats,
                          args.effective_config, args.lineset)
    if args.command == "simulate":
        return SimulateCommand(config, args.stream, args.groundtruth, args.labels)
    if args.command == "eval":
        return EvalCommand(config, args.snapshot, args.groundtruth, args.report)
    if args.command == "retrieve":
        return RetrieveCommand(args.snapshot, args.queries, args.top_k, args.classify)
    return BenchCommand(config, args.input, args.simulate, args.repeat, args.report)


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    Returns:
        int: 成功为 0，失败为 1
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)
    try:
        config = load_config(args.config, os.environ, overrides_from_args(args))
    except (BoxFusionError, ValidationError, OSError, ValueError) as e:
        print(f"错误：{' '.join(str(e).split())}", file=sys.stderr)
        return 1
    if args.print_config:
        print(dump_config(config))
        return 0
    return 0 if build_command(args, config).execute() else 1


if __name__ == "__main__":
    sys.exit(main())
