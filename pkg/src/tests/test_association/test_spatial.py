import itertools

import numpy as np
import pytest

from src.association.candidates import new_global_object
from src.association.spatial import spatial_associate
from src.config.settings import AssociationConfig
from src.models.box import Intrinsics, OrientedBox3D, Pose
from src.models.frame import CameraFrame
from src.models.global_object import CandidateObservation

INTRINSICS = Intrinsics(500.0, 500.0, 320.0, 240.0, 640, 480)


def frame_at(frame_id, dx=0.0):
    return CameraFrame(frame_id, INTRINSICS, Pose(np.array([1.0, 0, 0, 0]), [dx, 0.0, 0.0]))


def obs(center, frame, score=0.8, size=(0.5, 0.5, 0.5)):
    return CandidateObservation(OrientedBox3D.axis_aligned(center, size), score, frame)


@pytest.fixture
def config():
    return AssociationConfig(o_n=1024)


@pytest.fixture
def allocator():
    counter = itertools.count(100)
    return lambda: next(counter)


class TestSpatialAssociate:
    def test_merge_into_existing(self, config, allocator):
        """测试重叠提议并入已有物体"""
        existing = new_global_object(0, obs([0, 0, 3], frame_at(0)))
        outcome = spatial_associate([existing], [obs([0.05, 0, 3], frame_at(1, 1.0))], config, 0, allocator)
        assert outcome.spatial_ids == [0]
        assert outcome.created == []
        assert len(existing.candidates) == 2
        # 全局框保持不变，留待融合更新
        assert np.array_equal(existing.box.center, [0, 0, 3])

    def test_gate_failure_dropped(self, config, allocator):
        """测试同一视角的重叠提议被丢弃"""
        existing = new_global_object(0, obs([0, 0, 3], frame_at(0)))
        outcome = spatial_associate([existing], [obs([0, 0, 3], frame_at(1))], config, 0, allocator)
        assert outcome.dropped == 1
        assert outcome.merged_spatial == 0
        assert len(existing.candidates) == 1

    def test_disjoint_creates(self, config, allocator):
        """测试不重叠的提议新建物体"""
        existing = new_global_object(0, obs([0, 0, 3], frame_at(0)))
        outcome = spatial_associate([existing], [obs([2, 0, 3], frame_at(1, 1.0))], config, 0, allocator)
        assert outcome.created_ids == [100]
        assert [o.id for o in outcome.objects] == [0, 100]

    def test_unmatched_without_create(self, config):
        """测试 create_new 为 False 时保留未匹配提议"""
        proposal = obs([2, 0, 3], frame_at(1))
        outcome = spatial_associate([], [proposal], config, create_new=False)
        assert outcome.unmatched == [proposal]
        assert outcome.followers == [[]]
        assert outcome.objects == []

    def test_create_requires_allocator(self, config):
        """测试新建物体需要编号分配函数"""
        with pytest.raises(ValueError):
            spatial_associate([], [obs([0, 0, 3], frame_at(0))], config)

    def test_overlapping_proposals_same_frame(self, config, allocator):
        """测试同一帧内重叠的两个提议：低分者门控失败被丢弃"""
        proposals = [obs([0, 0, 3], frame_at(0), 0.6), obs([0.05, 0, 3], frame_at(0), 0.9)]
        outcome = spatial_associate([], proposals, config, 0, allocator)
        assert len(outcome.created) == 1
        assert outcome.created[0].candidates[0].score == 0.9
        assert outcome.dropped == 1
        assert outcome.n_proposals == 2

    def test_pending_follower_stored_with_head(self, config):
        """测试被抑制的提议作为跟随者随头部提议一起输出"""
        proposals = [obs([0, 0, 3], frame_at(0), 0.9), obs([0.05, 0, 3], frame_at(1, 1.0), 0.6)]
        outcome = spatial_associate([], proposals, config, create_new=False)
        assert outcome.unmatched == [proposals[0]]
        assert outcome.followers == [[proposals[1]]]

    def test_global_merge(self, config, allocator):
        """测试重叠的两个全局物体合并，保留较小编号与高分者的框"""
        high = new_global_object(5, obs([0, 0, 3], frame_at(0), 0.9))
        low = new_global_object(2, obs([0.05, 0, 3], frame_at(1, 1.0), 0.7))
        outcome = spatial_associate([high, low], [], config, 0, allocator)
        assert outcome.merged_objects == [(2, 5)]
        assert len(outcome.objects) == 1
        merged = outcome.objects[0]
        assert merged.id == 2
        assert np.array_equal(merged.box.center, [0, 0, 3])
        assert sorted(merged.frame_ids) == [0, 1]

    def test_high_score_proposal_suppresses_global(self, config, allocator):
        """测试高分提议抑制已有物体时由该物体承载提议"""
        existing = new_global_object(0, obs([0, 0, 3], frame_at(0), 0.5))
        proposal = obs([0.05, 0, 3], frame_at(1, 1.0), 0.95)
        outcome = spatial_associate([existing], [proposal], config, 0, allocator)
        assert outcome.created == []
        assert outcome.spatial_ids == [0]
        assert existing.score == 0.95

    def test_conservation(self, config, allocator):
        """测试每个提议恰好有一个去向"""
        rng = np.random.default_rng(0)
        existing = [new_global_object(i, obs(rng.uniform(-1, 1, 3), frame_at(0))) for i in range(5)]
        proposals = [obs(rng.uniform(-1, 1, 3), frame_at(1, 0.5), rng.uniform(0.3, 1.0)) for _ in range(12)]
        outcome = spatial_associate(existing, proposals, config, 0, allocator)
        assert outcome.n_proposals == len(proposals)
        ids = [o.id for o in outcome.objects]
        assert ids == sorted(set(ids))

    def test_empty_inputs(self, config, allocator):
        """测试空输入"""
        outcome = spatial_associate([], [], config, 0, allocator)
        assert outcome.objects == [] and outcome.n_proposals == 0

    def test_idempotent_on_merged_set(self, config, allocator):
        """测试对已抑制过的全局集合再次关联空提议时不发生任何合并"""
        rng = np.random.default_rng(4)
        proposals = [obs(rng.uniform(-1.0, 1.0, 3), frame_at(k % 3, 0.5 * k), rng.uniform(0.3, 1.0),
                         rng.uniform(0.3, 0.9, 3)) for k in range(30)]
        first = spatial_associate([], proposals, config, 7, allocator)
        assert len(first.objects) < len(proposals)
        before = [(o.id, o.box, len(o.candidates)) for o in first.objects]
        second = spatial_associate(first.objects, [], config, 7, allocator)
        assert second.merged_objects == []
        assert [(o.id, len(o.candidates)) for o in second.objects] == [(i, n) for i, _, n in before]
        assert all(o.box.bit_equal(box) for o, (_, box, _) in zip(second.objects, before))
