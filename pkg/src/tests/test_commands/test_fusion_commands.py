import json

import pytest

from src.commands.pipeline_commands import BenchCommand, RunCommand, input_frames
from src.commands.query_commands import EvalCommand, RetrieveCommand
from src.commands.simulate_commands import SimulateCommand
from src.config.settings import AssociationConfig, FusionConfig, RunConfig, SimulatorConfig
from src.exceptions.fusion_exceptions import ConfigError


@pytest.fixture
def config():
    """小规模仿真配置"""
    return RunConfig(seed=1, association=AssociationConfig(o_n=256), fusion=FusionConfig(n_pst=64, k_max=5),
                     simulator=SimulatorConfig(n_objects=3, n_frames=8, feature_dim=4))


@pytest.fixture
def simulated(config, tmp_path):
    """写出仿真检测流、真值与标签库"""
    paths = {name: tmp_path / f"{name}.jsonl" for name in ("stream", "groundtruth", "labels")}
    assert SimulateCommand(config, paths["stream"], paths["groundtruth"], paths["labels"]).execute()
    return paths


class TestFusionCommands:
    def test_simulate(self, simulated):
        """测试仿真命令写出三个文件"""
        assert all(path.exists() for path in simulated.values())
        header = json.loads(simulated["stream"].read_text(encoding="utf-8").splitlines()[0])
        assert header["format"] == "boxfusion-stream" and header["feature_dim"] == 4

    def test_simulate_labels_need_features(self, tmp_path):
        """测试没有语义特征时无法写出标签库"""
        config = RunConfig(simulator=SimulatorConfig(n_objects=2, n_frames=2))
        command = SimulateCommand(config, tmp_path / "s.jsonl", tmp_path / "g.jsonl", tmp_path / "l.jsonl")
        assert not command.execute()

    def test_run_outputs(self, config, simulated, tmp_path):
        """测试运行命令只写出指定的输出"""
        outputs = {name: tmp_path / name for name in ("snapshot.jsonl", "events.jsonl", "stats.json",
                                                      "effective.json", "boxes.obj")}
        command = RunCommand(config, simulated["stream"], False, outputs["snapshot.jsonl"],
                             outputs["events.jsonl"], outputs["stats.json"], outputs["effective.json"],
                             outputs["boxes.obj"])
        assert command.execute()
        assert all(path.exists() for path in outputs.values())
        events = outputs["events.jsonl"].read_text(encoding="utf-8").splitlines()
        assert len(events) == 8
        stats = json.loads(outputs["stats.json"].read_text(encoding="utf-8"))
        assert stats["frames"] == 8
        assert stats["objects"] == command.report["objects"]

    def test_run_simulated_matches_file(self, config, simulated, tmp_path):
        """测试直接仿真与读取仿真文件得到相同快照"""
        from_file, direct = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert RunCommand(config, simulated["stream"], snapshot=from_file).execute()
        assert RunCommand(config, simulate=True, snapshot=direct).execute()
        assert from_file.read_text(encoding="utf-8") == direct.read_text(encoding="utf-8")

    def test_input_source_required(self, config, tmp_path):
        """测试必须且只能指定一个输入来源"""
        with pytest.raises(ConfigError):
            input_frames(config, None, False)
        with pytest.raises(ConfigError):
            input_frames(config, tmp_path / "s.jsonl", True)
        assert not RunCommand(config).execute()

    def test_missing_input_file(self, config, tmp_path):
        """测试输入文件不存在时失败"""
        assert not RunCommand(config, tmp_path / "missing.jsonl").execute()

    def test_eval(self, config, simulated, tmp_path, capsys):
        """测试评估命令输出各阈值的 AP"""
        snapshot = tmp_path / "snapshot.jsonl"
        assert RunCommand(config, simulated["stream"], snapshot=snapshot).execute()
        capsys.readouterr()
        report = tmp_path / "report.json"
        command = EvalCommand(config, snapshot, simulated["groundtruth"], report)
        assert command.execute()
        printed = json.loads(capsys.readouterr().out.strip())
        assert list(printed) == ["AP15", "AP25", "AP50"]
        assert all(0.0 <= value <= 1.0 for value in printed.values())
        assert json.loads(report.read_text(encoding="utf-8"))["ap"] == printed

    def test_retrieve_and_classify(self, config, simulated, tmp_path):
        """测试检索与分类命令"""
        snapshot = tmp_path / "snapshot.jsonl"
        assert RunCommand(config, simulated["stream"], snapshot=snapshot).execute()
        retrieve = RetrieveCommand(snapshot, simulated["labels"], top_k=2)
        assert retrieve.execute()
        assert [r["label"] for r in retrieve.results] == ["object_0", "object_1", "object_2"]
        assert all(len(r["matches"]) <= 2 for r in retrieve.results)
        classify = RetrieveCommand(snapshot, simulated["labels"], classify_objects=True)
        assert classify.execute()
        assert all(r["label"].startswith("object_") for r in classify.results)

    def test_bench(self, config, simulated, tmp_path):
        """测试基准命令的报告"""
        report = tmp_path / "bench.json"
        command = BenchCommand(config, simulated["stream"], repeat=2, report=report)
        assert command.execute()
        data = json.loads(report.read_text(encoding="utf-8"))
        assert data["repeat"] == 2 and len(data["fps"]) == 2
        assert data["frames"] == 8

    def test_bench_invalid_repeat(self, config):
        """测试重复次数非法"""
        assert not BenchCommand(config, simulate=True, repeat=0).execute()
