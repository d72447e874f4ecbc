"""eval 与 retrieve 命令：读取快照文件并输出机器可读结果"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from .command import Command
from ..config.settings import RunConfig
from ..dataio.stream_io import load_groundtruth, load_label_bank, load_snapshot
from ..evaluation.metrics import evaluate
from ..semantics.features import classify, retrieve


class EvalCommand(Command):
    """以真值评估场景快照的类别无关 AP"""

    name = "eval"

    def __init__(self, config: RunConfig, snapshot: Path, groundtruth: Path, report: Optional[Path] = None):
        self.config = config
        self.snapshot = snapshot
        self.groundtruth = groundtruth
        self.report_path = report
        self.report: Dict[str, Any] = {}

    def run(self) -> None:
        snapshot = load_snapshot(self.snapshot)
        gts = [obj.box for obj in load_groundtruth(self.groundtruth)]
        self.report = evaluate(snapshot, gts, self.config.evaluation, self.config.seed).to_dict()
        if self.report_path is not None:
            Path(self.report_path).write_text(json.dumps(self.report, indent=2) + "\n", encoding="utf-8")
        print(json.dumps(self.report["ap"]))


class RetrieveCommand(Command):
    """用文本嵌入检索快照中的物体，或用标签库为每个物体分类"""

    name = "retrieve"

    def __init__(self, snapshot: Path, queries: Path, top_k: int = 5, classify_objects: bool = False):
        """
        初始化检索命令

        Args:
            snapshot: 场景快照文件
            queries: 标签库格式的查询文件，每条记录是一个查询
            top_k: 每个查询返回的物体数
            classify_objects: 为 True 时把查询文件当作标签库，为每个物体选择标签
        """
        self.snapshot = snapshot
        self.queries = queries
        self.top_k = top_k
        self.classify_objects = classify_objects
        self.results: List[Dict[str, Any]] = []

    def run(self) -> None:
        snapshot = load_snapshot(self.snapshot)
        queries = load_label_bank(self.queries)
        if self.classify_objects:
            self.results = [{"id": object_id, "label": label, "score": score}
                            for object_id, label, score in classify(snapshot, queries)]
        else:
            self.results = [{"label": query.label,
                             "matches": [{"id": object_id, "score": score}
                                         for object_id, score in retrieve(snapshot, query, self.top_k)]}
                            for query in queries]
        for result in self.results:
            print(json.dumps(result, ensure_ascii=False))
