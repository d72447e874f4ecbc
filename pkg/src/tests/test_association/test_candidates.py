import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.association.candidates import add_candidate, evict_candidate, new_global_object, view_diversity_gate
from src.config.settings import AssociationConfig
from src.models.box import Intrinsics, OrientedBox3D, Pose
from src.models.frame import CameraFrame
from src.models.global_object import CandidateObservation

INTRINSICS = Intrinsics(500.0, 500.0, 320.0, 240.0, 640, 480)


def observation(frame_id, pose, score=0.8, feature=None):
    frame = CameraFrame(frame_id, INTRINSICS, pose)
    return CandidateObservation(OrientedBox3D.axis_aligned([0, 0, 3], [0.5, 0.5, 0.5]), score, frame, feature)


def shifted(dx):
    return Pose(np.array([1.0, 0, 0, 0]), [dx, 0.0, 0.0])


class TestViewDiversityGate:
    def test_empty_list_passes(self):
        """测试空候选列表总是通过"""
        assert view_diversity_gate([], Pose.identity(), 0.26, 0.3)

    def test_same_view_rejected(self):
        """测试相同视角被拒绝"""
        assert not view_diversity_gate([observation(0, Pose.identity())], Pose.identity(), 0.26, 0.3)

    def test_translation_passes(self):
        """测试平移超过阈值时通过"""
        assert view_diversity_gate([observation(0, Pose.identity())], shifted(0.5), 0.26, 0.3)
        assert not view_diversity_gate([observation(0, Pose.identity())], shifted(0.1), 0.26, 0.3)

    def test_rotation_passes(self):
        """测试视线夹角超过阈值时通过"""
        turned = Pose.from_rotation(Rotation.from_euler("y", np.radians(20)), [0, 0, 0])
        slight = Pose.from_rotation(Rotation.from_euler("y", np.radians(5)), [0, 0, 0])
        assert view_diversity_gate([observation(0, Pose.identity())], turned, np.radians(15), 0.3)
        assert not view_diversity_gate([observation(0, Pose.identity())], slight, np.radians(15), 0.3)

    def test_must_differ_from_every_view(self):
        """测试必须与所有已存储视角都不同"""
        psi = [observation(0, shifted(1.0)), observation(1, Pose.identity())]
        assert not view_diversity_gate(psi, shifted(0.05), 0.26, 0.3)


class TestCandidateList:
    @pytest.fixture
    def config(self):
        return AssociationConfig(n_cand_max=2)

    def test_new_object(self):
        """测试新建物体的全局框等于观测框"""
        obs = observation(0, Pose.identity())
        obj = new_global_object(4, obs)
        assert obj.id == 4
        assert obj.box is obs.box_world
        assert obj.candidates == [obs]
        assert obj.fused_dirty and not obj.feature_dirty

    def test_add_sets_dirty(self, config):
        """测试加入候选后标记为待融合"""
        obj = new_global_object(0, observation(0, Pose.identity()))
        obj.fused_dirty = False
        assert add_candidate(obj, observation(1, shifted(1.0), feature=np.ones(2) / np.sqrt(2)), config)
        assert obj.fused_dirty and obj.feature_dirty
        assert obj.frame_ids == [0, 1]

    def test_gate_failure_not_stored(self, config):
        """测试门控失败时候选列表不变"""
        obj = new_global_object(0, observation(0, Pose.identity()))
        obj.fused_dirty = False
        assert not add_candidate(obj, observation(1, Pose.identity()), config)
        assert len(obj.candidates) == 1
        assert not obj.fused_dirty

    def test_eviction_lowest_score(self, config):
        """测试超出容量时淘汰置信度最低者"""
        obj = new_global_object(0, observation(0, shifted(0.0), score=0.6))
        add_candidate(obj, observation(1, shifted(1.0), score=0.9), config)
        add_candidate(obj, observation(2, shifted(2.0), score=0.7), config)
        assert obj.frame_ids == [1, 2]
        assert obj.score == 0.9

    def test_eviction_tie_oldest(self):
        """测试置信度并列时淘汰最早的帧"""
        obj = new_global_object(0, observation(5, shifted(0.0), score=0.5))
        obj.candidates.append(observation(3, shifted(1.0), score=0.5))
        obj.candidates.append(observation(7, shifted(2.0), score=0.9))
        evict_candidate(obj, 2)
        assert obj.frame_ids == [5, 7]

    def test_eviction_noop_within_capacity(self):
        """测试容量内不做修改"""
        obj = new_global_object(0, observation(0, Pose.identity()))
        evict_candidate(obj, 3)
        assert len(obj.candidates) == 1
