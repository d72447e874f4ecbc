import time

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.config.settings import FusionConfig, NoiseModel
from src.dataio.simulator import SimScene, look_at, simulate_proposals
from src.fusion.objective import fusion_objective
from src.fusion.optimizer import init_from_candidates, maybe_fuse, pfo_optimize
from src.fusion.swarm import pst_generate
from src.geometry.iou3d import exact_iou_3d
from src.geometry.polygon import hull_iou_2d
from src.geometry.projection import project_box_hull
from src.geometry.transforms import transform_box
from src.models.box import Intrinsics, OrientedBox3D, Pose
from src.models.frame import CameraFrame
from src.models.global_object import CandidateObservation, GlobalObject
from src.models.scene_state import GroundTruthObject

INTRINSICS = Intrinsics(500.0, 500.0, 320.0, 240.0, 640, 480)
TARGET = np.array([0.0, 0.0, 0.5])
EYES = ([2.0, 0.0, 1.5], [0.0, 2.0, 1.5], [-2.0, 0.5, 1.2], [0.3, -2.0, 1.6])
GT = OrientedBox3D.axis_aligned(TARGET, [0.6, 0.4, 0.5])


def noisy_candidates(seed=0, sigma=0.05, scores=(0.7, 0.9, 0.6, 0.8)):
    rng = np.random.default_rng(seed)
    psi = []
    for i, eye in enumerate(EYES):
        box = GT.with_center_size(GT.center + rng.normal(0, sigma, 3), GT.size * np.exp(rng.normal(0, sigma, 3)))
        psi.append(CandidateObservation(box, scores[i], CameraFrame(i, INTRINSICS, look_at(eye, TARGET))))
    return psi


def exact_candidates():
    return [CandidateObservation(GT, 0.8, CameraFrame(i, INTRINSICS, look_at(eye, TARGET)))
            for i, eye in enumerate(EYES)]


@pytest.fixture
def pst():
    return pst_generate(256, 0)


@pytest.fixture
def config():
    return FusionConfig(n_pst=256)


class TestPfoOptimize:
    def test_init_from_candidates(self):
        """测试初始状态为候选均值与最高置信度候选的旋转"""
        psi = noisy_candidates()
        center, size, quat = init_from_candidates(psi)
        assert np.allclose(center, np.mean([c.box_world.center for c in psi], axis=0))
        assert np.allclose(size, np.mean([c.box_world.size for c in psi], axis=0))
        assert np.array_equal(quat, psi[1].box_world.rotation)

    def test_optimal_start_stays(self, pst, config):
        """测试从最优状态出发时保持不动并收敛"""
        psi = exact_candidates()
        result = pfo_optimize((GT.center, GT.size, GT.rotation), psi, pst, config)
        assert np.array_equal(result.p_star, GT.center)
        assert np.array_equal(result.s_star, GT.size)
        assert result.fitness == result.initial_fitness
        assert result.converged
        assert result.iterations == 3

    def test_improves_noisy_start(self, pst, config):
        """测试从含噪初值出发适应度不下降并有实际提升"""
        psi = noisy_candidates()
        init = init_from_candidates(psi)
        shifted = (init[0] + [0.1, -0.05, 0.0], init[1], init[2])
        result = pfo_optimize(shifted, psi, pst, config)
        assert result.fitness >= result.initial_fitness
        assert result.fitness > result.initial_fitness + 1e-3
        assert result.iterations <= config.k_max
        assert result.fitness == pytest.approx(fusion_objective(result.p_star, result.s_star, init[2], psi))

    def test_softmax_selection(self, pst):
        """测试 softmax 选择方式同样不降低适应度"""
        psi = noisy_candidates(1)
        result = pfo_optimize(init_from_candidates(psi), psi, pst, FusionConfig(n_pst=256, selection="softmax"))
        assert result.fitness >= result.initial_fitness

    def test_deterministic(self, pst, config):
        """测试相同输入得到按位相同的结果"""
        psi = noisy_candidates(2)
        a = pfo_optimize(init_from_candidates(psi), psi, pst, config)
        b = pfo_optimize(init_from_candidates(psi), psi, pst, config)
        assert np.array_equal(a.p_star, b.p_star) and np.array_equal(a.s_star, b.s_star)

    def test_translation_equivariant(self, pst, config):
        """测试候选、相机与初值同时平移时结果随之平移"""
        offset = np.array([0.7, -0.3, 0.2])
        psi = noisy_candidates(3)
        moved = [CandidateObservation(c.box_world.with_center_size(c.box_world.center + offset, c.box_world.size),
                                      c.score, CameraFrame(c.frame_id, c.intrinsics,
                                                           Pose(c.frame.world_from_cam.rotation,
                                                                c.frame.world_from_cam.translation + offset)))
                 for c in psi]
        center, size, quat = init_from_candidates(psi)
        a = pfo_optimize((center, size, quat), psi, pst, config)
        b = pfo_optimize((center + offset, size, quat), moved, pst, config)
        assert np.allclose(b.p_star, a.p_star + offset, atol=1e-6)
        assert np.allclose(b.s_star, a.s_star, atol=1e-6)
        assert b.fitness == pytest.approx(a.fitness, abs=1e-9)


def recovery_trial(seed):
    """单个真值盒、环绕的 5 个视角、默认噪声模型下的仿真候选"""
    rng = np.random.default_rng(seed)
    size = rng.uniform(0.2, 1.0, 3)
    gt = OrientedBox3D.from_rotation([*rng.uniform(-0.3, 0.3, 2), size[2] / 2], size,
                                     Rotation.from_euler("z", rng.uniform(0.0, np.pi)))
    scene = SimScene((GroundTruthObject(0, gt),), (6.0, 6.0, 3.0), seed)
    noise = NoiseModel(dropout_p=0.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    psi = []
    for k in range(5):
        theta = phase + 2 * np.pi * k / 5
        eye = gt.center + [2.5 * np.cos(theta), 2.5 * np.sin(theta), rng.uniform(0.7, 1.3)]
        pose = look_at(eye, gt.center)
        proposal = simulate_proposals(scene, pose, INTRINSICS, noise, seed, k).proposals[0]
        psi.append(CandidateObservation(transform_box(pose, proposal.box), proposal.score,
                                        CameraFrame(k, INTRINSICS, pose)))
    return gt, psi


class TestFusionRecovery:
    @pytest.mark.slow
    def test_fused_beats_average_init(self):
        """测试 200 次仿真中至少 80% 的融合结果不差于候选均值，且平均 IoU 更高"""
        config = FusionConfig()
        pst = pst_generate(config.n_pst, 0)
        init_ious, fused_ious = [], []
        for seed in range(200):
            gt, psi = recovery_trial(seed)
            center, size, quat = init_from_candidates(psi)
            result = pfo_optimize((center, size, quat), psi, pst, config)
            init_ious.append(exact_iou_3d(OrientedBox3D(center, size, quat), gt))
            fused_ious.append(exact_iou_3d(OrientedBox3D(result.p_star, result.s_star, quat), gt))
        init_ious, fused_ious = np.array(init_ious), np.array(fused_ious)
        assert np.count_nonzero(fused_ious >= init_ious) >= 160
        assert fused_ious.mean() > init_ious.mean()

    def test_candidates_project_close_to_truth(self):
        """测试仿真候选在各自视角中的投影接近真值"""
        gt, psi = recovery_trial(0)
        for c in psi:
            truth = project_box_hull(c.intrinsics, c.cam_from_world, gt)
            hull = project_box_hull(c.intrinsics, c.cam_from_world, c.box_world)
            assert hull_iou_2d(hull, truth) > 0.5


class TestFusionLatency:
    @pytest.mark.slow
    def test_default_fusion_under_budget(self):
        """测试默认参数下 5 个视角的单次融合耗时中位数低于 20 ms"""
        config = FusionConfig()
        pst = pst_generate(config.n_pst, 0)
        trials = [recovery_trial(seed) for seed in range(20)]
        gt, psi = trials[0]
        pfo_optimize(init_from_candidates(psi), psi, pst, config)
        elapsed = []
        for gt, psi in trials:
            init = init_from_candidates(psi)
            start = time.perf_counter()
            pfo_optimize(init, psi, pst, config)
            elapsed.append(time.perf_counter() - start)
        assert np.median(elapsed) < 0.02


class TestMaybeFuse:
    def make_object(self, psi):
        return GlobalObject(id=0, box=psi[0].box_world, candidates=list(psi), fused_dirty=True)

    def test_below_threshold(self, pst, config):
        """测试候选不足 tau_box 时不融合"""
        obj = self.make_object(noisy_candidates()[:2])
        box = obj.box
        maybe_fuse(obj, pst, config)
        assert obj.box is box and obj.fusion_count == 0 and obj.fused_dirty

    def test_strategy_none(self, pst):
        """测试 none 策略不修改物体"""
        obj = self.make_object(noisy_candidates())
        box = obj.box
        maybe_fuse(obj, pst, FusionConfig(strategy="none"))
        assert obj.box is box and obj.fusion_count == 0

    def test_average(self, pst):
        """测试 average 策略取候选均值"""
        psi = noisy_candidates()
        obj = self.make_object(psi)
        maybe_fuse(obj, pst, FusionConfig(strategy="average"))
        assert np.allclose(obj.box.center, np.mean([c.box_world.center for c in psi], axis=0))
        assert obj.fusion_count == 1 and not obj.fused_dirty

    def test_best_score(self, pst):
        """测试 best_score 策略取最高置信度候选"""
        psi = noisy_candidates()
        obj = self.make_object(psi)
        maybe_fuse(obj, pst, FusionConfig(strategy="best_score"))
        assert obj.box is psi[1].box_world

    def test_clean_object_not_refused(self, pst, config):
        """测试没有新候选时不重复融合"""
        obj = self.make_object(noisy_candidates())
        maybe_fuse(obj, pst, config)
        box = obj.box
        maybe_fuse(obj, pst, config)
        assert obj.box is box and obj.fusion_count == 1

    def test_warm_start_keeps_rotation(self, pst, config):
        """测试热启动后旋转保持不变，融合次数递增"""
        obj = self.make_object(noisy_candidates())
        maybe_fuse(obj, pst, config)
        rotation = obj.box.rotation.copy()
        obj.fused_dirty = True
        maybe_fuse(obj, pst, config)
        assert obj.fusion_count == 2
        assert np.array_equal(obj.box.rotation, rotation)
