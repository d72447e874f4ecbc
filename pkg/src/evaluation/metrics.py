"""类别无关的三维检测评估：贪心匹配、PR 曲线与全点插值 AP"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config.settings import EvalConfig
from ..geometry.iou3d import exact_iou_3d, mc_iou_3d
from ..geometry.transforms import aabb_iou, aabb_of
from ..models.box import OrientedBox3D
from ..models.scene_state import SceneSnapshot

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PRCurve:
    """
    PR 曲线与 AP

    Note:
        n_gt 为 0 时召回率无定义，undefined 为 True：无检测时 AP 记为 1.0，否则为 0.0
    """

    recall: np.ndarray
    precision: np.ndarray
    ap: float
    undefined: bool = False


@dataclass
class ThresholdResult:
    threshold: float
    ap: float
    n_gt: int
    n_det: int
    n_tp: int
    undefined: bool
    curve: PRCurve

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "ap": self.ap,
            "n_gt": self.n_gt,
            "n_det": self.n_det,
            "n_tp": self.n_tp,
            "undefined": self.undefined,
            "pr": [[float(r), float(p)] for r, p in zip(self.curve.recall, self.curve.precision)],
        }


@dataclass
class EvalReport:
    """各 IoU 阈值下的评估结果"""

    mode: str
    backend: str
    results: List[ThresholdResult] = field(default_factory=list)

    def ap_table(self) -> Dict[str, float]:
        """形如 {"AP15": 0.9, "AP25": 0.8} 的摘要"""
        return {f"AP{round(r.threshold * 100):d}": r.ap for r in self.results}

    def to_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode, "backend": self.backend, "ap": self.ap_table(),
                "thresholds": [r.to_dict() for r in self.results]}


def pairwise_iou(dets: Sequence[OrientedBox3D], gts: Sequence[OrientedBox3D], config: EvalConfig,
                 seed: int = 0) -> np.ndarray:
    """
    检测与真值两两之间的三维 IoU

    Returns:
        np.ndarray: (D, G)

    Note:
        axis_aligned 模式比较两者的轴对齐包围盒；oriented 模式按 iou_backend
        使用精确裁剪或蒙特卡罗估计
    """
    ious = np.zeros((len(dets), len(gts)))
    if config.mode == "axis_aligned":
        det_bounds = [aabb_of(b) for b in dets]
        gt_bounds = [aabb_of(b) for b in gts]
        for i, (dmin, dmax) in enumerate(det_bounds):
            for j, (gmin, gmax) in enumerate(gt_bounds):
                ious[i, j] = aabb_iou(dmin, dmax, gmin, gmax)
        return ious
    for i, det in enumerate(dets):
        for j, gt in enumerate(gts):
            if config.iou_backend == "monte_carlo":
                ious[i, j] = mc_iou_3d(det, gt, config.eval_samples, seed)
            else:
                ious[i, j] = exact_iou_3d(det, gt)
    return ious


def score_order(scores: Sequence[float]) -> np.ndarray:
    """置信度降序，并列时按输入顺序"""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def match_detections(dets: Sequence[OrientedBox3D], scores: Sequence[float],
                     gts: Sequence[OrientedBox3D], iou_thresh: float, config: EvalConfig,
                     ious: Optional[np.ndarray] = None, seed: int = 0) -> np.ndarray:
    """
    贪心匹配检测与真值

    Args:
        dets: 检测框
        scores: 检测置信度
        gts: 真值框
        iou_thresh: IoU 阈值
        config: 评估参数
        ious: 可选的预计算 (D, G) IoU 矩阵
        seed: 蒙特卡罗后端的随机种子

    Returns:
        np.ndarray: (D,) 布尔数组，按输入顺序标记每个检测是否为 TP

    Note:
        检测按置信度降序处理，每个检测匹配 IoU 最高且尚未匹配的真值，
        IoU ≥ iou_thresh 时为 TP；每个真值最多匹配一次
    """
    if ious is None:
        ious = pairwise_iou(dets, gts, config, seed)
    flags = np.zeros(len(dets), dtype=bool)
    taken = np.zeros(len(gts), dtype=bool)
    for i in score_order(scores):
        if not len(gts):
            break
        candidates = np.where(taken, -1.0, ious[i])
        j = int(np.argmax(candidates))
        if candidates[j] >= iou_thresh:
            flags[i] = True
            taken[j] = True
    return flags


def average_precision(flags: Sequence[bool], n_gt: int) -> PRCurve:
    """
    全点插值 AP

    Args:
        flags: 按置信度降序排列的 TP/FP 标记
        n_gt: 真值数量

    Returns:
        PRCurve: 召回率、精度与 AP
    """
    flags = np.asarray(flags, dtype=bool)
    if n_gt == 0:
        ap = 1.0 if len(flags) == 0 else 0.0
        logger.warning("真值为空，AP 无定义，记为 %.1f", ap)
        return PRCurve(np.zeros(len(flags)), np.zeros(len(flags)), ap, undefined=True)
    if len(flags) == 0:
        return PRCurve(np.zeros(0), np.zeros(0), 0.0)
    tp = np.cumsum(flags)
    recall = tp / float(n_gt)
    precision = tp / np.arange(1, len(flags) + 1)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changes = np.flatnonzero(mrec[1:] != mrec[:-1]) + 1
    ap = float(np.sum((mrec[changes] - mrec[changes - 1]) * mpre[changes]))
    return PRCurve(recall, precision, min(max(ap, 0.0), 1.0))


def evaluate(snapshot: SceneSnapshot, gts: Sequence[OrientedBox3D], config: EvalConfig,
             seed: int = 0) -> EvalReport:
    """
    在每个 IoU 阈值下计算 AP

    Args:
        snapshot: 场景快照（检测）
        gts: 真值框
        config: 评估参数
        seed: 蒙特卡罗后端的随机种子

    Returns:
        EvalReport: 各阈值的 AP、计数与 PR 采样点
    """
    dets = [obj.box for obj in snapshot.objects]
    scores = [obj.score for obj in snapshot.objects]
    ious = pairwise_iou(dets, gts, config, seed)
    order = score_order(scores)
    report = EvalReport(mode=config.mode, backend=config.iou_backend)
    for threshold in config.iou_thresholds:
        flags = match_detections(dets, scores, gts, threshold, config, ious=ious)
        curve = average_precision(flags[order], len(gts))
        report.results.append(ThresholdResult(threshold=threshold, ap=curve.ap, n_gt=len(gts),
                                              n_det=len(dets), n_tp=int(flags.sum()),
                                              undefined=curve.undefined, curve=curve))
    logger.info("评估完成：%s", report.ap_table())
    return report
