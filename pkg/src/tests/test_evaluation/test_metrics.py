import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.config.settings import EvalConfig
from src.evaluation.metrics import average_precision, evaluate, match_detections, pairwise_iou, score_order
from src.models.box import OrientedBox3D
from src.models.scene_state import SceneSnapshot, SnapshotObject


def cube(x, yaw=0.0):
    return OrientedBox3D.from_rotation([x, 0.0, 0.5], [1.0, 1.0, 1.0], Rotation.from_euler("z", yaw))


def snapshot_of(boxes, scores):
    return SceneSnapshot(tuple(SnapshotObject(i, box, score, 1) for i, (box, score) in enumerate(zip(boxes, scores))))


@pytest.fixture
def config():
    return EvalConfig()


class TestAveragePrecision:
    def test_known_value(self):
        """测试 [TP, FP, TP]、两个真值时 AP 为 5/6"""
        curve = average_precision([True, False, True], 2)
        assert curve.ap == pytest.approx(5 / 6)
        assert np.allclose(curve.recall, [0.5, 0.5, 1.0])
        assert np.allclose(curve.precision, [1.0, 0.5, 2 / 3])

    def test_perfect(self):
        """测试全部为 TP 时 AP 为 1"""
        assert average_precision([True, True, True], 3).ap == pytest.approx(1.0)

    def test_all_false(self):
        """测试全部为 FP 时 AP 为 0"""
        assert average_precision([False, False], 2).ap == 0.0

    def test_no_detections(self):
        """测试没有检测时 AP 为 0"""
        assert average_precision([], 3).ap == 0.0

    def test_no_ground_truth(self):
        """测试真值为空时 AP 无定义"""
        empty = average_precision([], 0)
        assert empty.undefined and empty.ap == 1.0
        spurious = average_precision([False], 0)
        assert spurious.undefined and spurious.ap == 0.0


class TestMatching:
    def test_score_order_stable(self):
        """测试置信度并列时保持输入顺序"""
        assert score_order([0.5, 0.9, 0.5, 0.9]).tolist() == [1, 3, 0, 2]

    def test_each_gt_matched_once(self, config):
        """测试重复检测只有高分者为 TP"""
        flags = match_detections([cube(0.0), cube(0.05)], [0.6, 0.9], [cube(0.0)], 0.5, config)
        assert flags.tolist() == [False, True]

    def test_threshold(self, config):
        """测试 IoU 低于阈值时为 FP"""
        # 偏移半个边长的单位立方体 IoU 为 1/3
        dets, gts = [cube(0.5)], [cube(0.0)]
        assert match_detections(dets, [0.9], gts, 0.25, config).tolist() == [True]
        assert match_detections(dets, [0.9], gts, 0.5, config).tolist() == [False]

    def test_no_ground_truth(self, config):
        """测试没有真值时全部为 FP"""
        assert match_detections([cube(0.0)], [0.9], [], 0.25, config).tolist() == [False]

    def test_axis_aligned_mode(self):
        """测试轴对齐模式比较两者的外接轴对齐盒"""
        rotated = cube(0.0, np.pi / 4)
        ious = pairwise_iou([rotated], [cube(0.0)], EvalConfig(mode="axis_aligned"))
        # 旋转 45° 的外接盒为 √2 × √2 × 1，包含单位立方体
        assert ious[0, 0] == pytest.approx(0.5)
        oriented = pairwise_iou([rotated], [cube(0.0)], EvalConfig())
        assert oriented[0, 0] == pytest.approx(np.sqrt(2) / 2)

    def test_monte_carlo_backend(self):
        """测试蒙特卡罗后端接近精确值"""
        ious = pairwise_iou([cube(0.5)], [cube(0.0)], EvalConfig(iou_backend="monte_carlo"))
        assert ious[0, 0] == pytest.approx(1 / 3, abs=0.02)


class TestEvaluate:
    def test_report(self, config):
        """测试各阈值的 AP、计数与摘要键"""
        gts = [cube(0.0), cube(3.0)]
        snapshot = snapshot_of([cube(0.0), cube(3.5), cube(10.0)], [0.9, 0.8, 0.7])
        report = evaluate(snapshot, gts, config)
        table = report.ap_table()
        assert list(table) == ["AP15", "AP25", "AP50"]
        # AP15 与 AP25：两个 TP 排在 FP 之前
        assert table["AP15"] == pytest.approx(1.0)
        assert table["AP25"] == pytest.approx(1.0)
        # AP50：只有第一个检测为 TP
        assert table["AP50"] == pytest.approx(0.5)
        result = report.results[2].to_dict()
        assert result["n_gt"] == 2 and result["n_det"] == 3 and result["n_tp"] == 1
        assert report.to_dict()["mode"] == "oriented"

    def test_empty_snapshot(self, config):
        """测试空快照的 AP 为 0"""
        report = evaluate(SceneSnapshot(), [cube(0.0)], config)
        assert all(r.ap == 0.0 for r in report.results)

    def test_empty_ground_truth(self, config):
        """测试真值为空时标记为无定义"""
        report = evaluate(snapshot_of([cube(0.0)], [0.9]), [], config)
        assert all(r.undefined and r.ap == 0.0 for r in report.results)


def jittered_scene(rng, n_gt=12):
    """间隔排列的真值盒，每个对应一个含噪检测，另加若干远离真值的误检"""
    gts = [OrientedBox3D.from_rotation([4.0 * i, rng.uniform(-0.5, 0.5), 0.5], rng.uniform(0.5, 1.5, 3),
                                       Rotation.from_euler("z", rng.uniform(0, np.pi))) for i in range(n_gt)]
    dets = [gt.with_center_size(gt.center + rng.normal(0, 0.15, 3), gt.size * np.exp(rng.normal(0, 0.2, 3)))
            for gt in gts]
    dets += [OrientedBox3D.axis_aligned([4.0 * i + 2.0, 4.0, 0.5], [1.0, 1.0, 1.0]) for i in range(4)]
    scores = rng.permutation(np.linspace(0.2, 0.95, len(dets)))
    return gts, dets, scores


class TestApInvariants:
    def test_monotone_in_threshold(self):
        """测试 AP 随 IoU 阈值升高不增"""
        rng = np.random.default_rng(0)
        config = EvalConfig(iou_thresholds=[round(0.1 * k, 1) for k in range(1, 10)])
        for _ in range(5):
            gts, dets, scores = jittered_scene(rng)
            aps = [r.ap for r in evaluate(snapshot_of(dets, scores), gts, config).results]
            assert all(b <= a + 1e-12 for a, b in zip(aps, aps[1:]))

    def test_permutation_invariant(self, config):
        """测试置信度互不相同时，打乱检测顺序不改变 AP"""
        rng = np.random.default_rng(1)
        gts, dets, scores = jittered_scene(rng)
        expected = evaluate(snapshot_of(dets, scores), gts, config).ap_table()
        for _ in range(5):
            perm = rng.permutation(len(dets))
            shuffled = snapshot_of([dets[i] for i in perm], [scores[i] for i in perm])
            assert evaluate(shuffled, gts, config).ap_table() == expected
