"""开放词汇语义：多视角特征融合、文本检索与分类"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions.fusion_exceptions import DimensionMismatchError
from ..models.box import optional_feature
from ..models.global_object import CandidateObservation
from ..models.scene_state import SceneSnapshot

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-5


def normalize(values: np.ndarray) -> Optional[np.ndarray]:
    """L2 归一化，零向量返回 None"""
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        return None
    return optional_feature(np.asarray(values, dtype=np.float64) / norm)


@dataclass(frozen=True, eq=False)
class TextQuery:
    """文本查询：label 仅用于报告，embedding 为单位向量"""

    label: str
    embedding: np.ndarray

    def __post_init__(self):
        embedding = optional_feature(self.embedding)
        norm = float(np.linalg.norm(embedding))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            unit = normalize(embedding)
            if unit is None:
                raise DimensionMismatchError(f"查询 {self.label} 的嵌入为零向量")
            logger.debug("查询 %s 的嵌入范数为 %.6f，已归一化", self.label, norm)
            embedding = unit
        object.__setattr__(self, "embedding", embedding)


def fuse_features(psi: Sequence[CandidateObservation]) -> Optional[np.ndarray]:
    """
    按置信度加权平均候选特征并归一化

    Args:
        psi: 候选列表，无特征的候选被忽略

    Returns:
        Optional[np.ndarray]: 单位特征；没有任何候选带特征时为 None

    Raises:
        DimensionMismatchError: 候选特征维度不一致
    """
    featured = [c for c in psi if c.feature is not None]
    if not featured:
        return None
    dims = {len(c.feature) for c in featured}
    if len(dims) > 1:
        raise DimensionMismatchError(f"候选特征维度不一致：{sorted(dims)}")
    weights = np.array([c.score for c in featured], dtype=np.float64)
    stacked = np.array([c.feature for c in featured])
    if weights.sum() <= 0.0:
        weights = np.ones_like(weights)
    return normalize(weights @ stacked)


def _similarities(snapshot: SceneSnapshot, embedding: np.ndarray) -> List[Tuple[int, float]]:
    result = []
    for obj in snapshot.objects:
        if obj.feature is None:
            continue
        if len(obj.feature) != len(embedding):
            raise DimensionMismatchError(
                f"物体 {obj.id} 的特征维度为 {len(obj.feature)}，查询维度为 {len(embedding)}")
        result.append((obj.id, float(np.dot(obj.feature, embedding))))
    return result


def retrieve(snapshot: SceneSnapshot, query: TextQuery, top_k: int) -> List[Tuple[int, float]]:
    """
    按余弦相似度检索物体

    Args:
        snapshot: 场景快照，无特征的物体不参与
        query: 文本查询
        top_k: 返回数量，0 返回空列表

    Returns:
        List[Tuple[int, float]]: (物体编号, 相似度)，按相似度降序，并列时编号小者在前

    Raises:
        DimensionMismatchError: 特征维度与查询不一致
    """
    scored = _similarities(snapshot, query.embedding)
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:max(top_k, 0)]


def classify(snapshot: SceneSnapshot, label_bank: Sequence[TextQuery]) -> List[Tuple[int, str, float]]:
    """
    为每个带特征的物体选择最相似的标签

    Args:
        snapshot: 场景快照
        label_bank: 非空标签库

    Returns:
        List[Tuple[int, str, float]]: (物体编号, 标签, 相似度)，按物体编号排列；
        相似度并列时取标签库中靠前者

    Raises:
        ValueError: 标签库为空
        DimensionMismatchError: 维度不一致
    """
    if not label_bank:
        raise ValueError("标签库不能为空")
    dims = {len(q.embedding) for q in label_bank}
    if len(dims) > 1:
        raise DimensionMismatchError(f"标签库嵌入维度不一致：{sorted(dims)}")
    bank = np.array([q.embedding for q in label_bank])
    result = []
    for obj in snapshot.objects:
        if obj.feature is None:
            continue
        if len(obj.feature) != bank.shape[1]:
            raise DimensionMismatchError(
                f"物体 {obj.id} 的特征维度为 {len(obj.feature)}，标签维度为 {bank.shape[1]}")
        scores = bank @ obj.feature
        best = int(np.argmax(scores))
        result.append((obj.id, label_bank[best].label, float(scores[best])))
    return result
