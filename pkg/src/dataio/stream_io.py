"""JSON Lines 文件读写：首行为文件头，其后每行一条记录"""
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError
from pydantic_core import from_json

from .records import (FORMAT_VERSION, GROUNDTRUTH_FORMAT, LABELS_FORMAT, SNAPSHOT_FORMAT,
                      STREAM_FORMAT, FileHeader, FrameRecord, GroundTruthRecord, IntrinsicsRecord,
                      LabelRecord, PoseRecord, ProposalRecord, SnapshotRecord, StreamHeader)
from ..exceptions.fusion_exceptions import (BoxFusionError, FrameOrderError, SchemaVersionError,
                                            StreamFormatError)
from ..models.box import Intrinsics
from ..models.frame import FrameInput
from ..models.scene_state import GroundTruthObject, SceneSnapshot
from ..semantics.features import UNIT_NORM_TOLERANCE, TextQuery

logger = logging.getLogger(__name__)

RecordT = TypeVar("RecordT", bound=BaseModel)
_EVENT = TypeAdapter(Dict[str, Any])


def _dump(record: Union[BaseModel, Dict[str, Any]]) -> str:
    if isinstance(record, BaseModel):
        return record.model_dump_json(exclude_none=True)
    return _EVENT.dump_json(record).decode("utf-8")


class JsonLinesWriter:
    """逐行写出 JSON 记录的上下文管理器"""

    def __init__(self, path: Path, header: Optional[FileHeader] = None):
        self.path = Path(path)
        self.header = header
        self._file = None

    def __enter__(self) -> "JsonLinesWriter":
        self._file = open(self.path, "w", encoding="utf-8")
        if self.header is not None:
            self.write(self.header)
        return self

    def write(self, record: Union[BaseModel, Dict[str, Any]]) -> None:
        self._file.write(_dump(record) + "\n")

    def __exit__(self, exc_type, exc, tb) -> None:
        self._file.close()


def _header(fmt: str) -> FileHeader:
    return FileHeader(format=fmt, version=FORMAT_VERSION)


def _read_lines(path: Path, expected_format: str) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    读取文件头并逐行产出 (行号, 记录字典)；首个产出为文件头

    Raises:
        SchemaVersionError: 格式名或版本不匹配
        StreamFormatError: 行不是合法 JSON 对象
    """
    with open(path, "r", encoding="utf-8") as f:
        first = True
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = from_json(line)
            except ValueError as e:
                raise StreamFormatError(f"{path} 第 {line_no} 行不是合法 JSON：{e}") from e
            if not isinstance(data, dict):
                raise StreamFormatError(f"{path} 第 {line_no} 行必须是 JSON 对象")
            if first:
                first = False
                if data.get("format") != expected_format or data.get("version") != FORMAT_VERSION:
                    raise SchemaVersionError(
                        f"{path} 的文件头为 {data.get('format')!r} v{data.get('version')!r}，"
                        f"期望 {expected_format!r} v{FORMAT_VERSION}")
            yield line_no, data


def _parse(model: Type[RecordT], data: Dict[str, Any], where: str) -> RecordT:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise StreamFormatError(f"{where}：字段 {location} {first['msg']}") from e


def _records(path: Path, fmt: str, model: Type[RecordT]) -> Tuple[Optional[Dict[str, Any]], List[RecordT]]:
    header, records = None, []
    for line_no, data in _read_lines(path, fmt):
        if header is None:
            header = data
            continue
        records.append(_parse(model, data, f"{path} 第 {line_no} 行"))
    return header, records


def write_stream(frames: Iterable[FrameInput], path: Path,
                 default_intrinsics: Optional[Intrinsics] = None,
                 feature_dim: Optional[int] = None) -> int:
    """
    写出检测流

    Args:
        frames: 帧输入，按帧号升序
        path: 输出路径
        default_intrinsics: 文件头中的默认内参；与之相同的帧内参不再逐帧写出
        feature_dim: 语义特征维度

    Returns:
        int: 写出的帧数

    Note:
        隐藏的 provenance 字段不会写出
    """
    header = StreamHeader(
        intrinsics=None if default_intrinsics is None else IntrinsicsRecord.from_model(default_intrinsics),
        feature_dim=feature_dim)
    count = 0
    with JsonLinesWriter(path, header) as writer:
        for frame in frames:
            intrinsics = None if frame.intrinsics == default_intrinsics else \
                IntrinsicsRecord.from_model(frame.intrinsics)
            writer.write(FrameRecord(
                frame_id=frame.frame_id,
                timestamp=frame.timestamp,
                intrinsics=intrinsics,
                pose=PoseRecord.from_model(frame.world_from_cam),
                proposals=[ProposalRecord.from_model(p) for p in frame.proposals]))
            count += 1
    return count


def _check_feature(values: Optional[List[float]], feature_dim: Optional[int], where: str) -> None:
    if values is None:
        return
    if feature_dim is not None and len(values) != feature_dim:
        raise StreamFormatError(f"{where}：特征维度为 {len(values)}，文件头声明为 {feature_dim}")
    norm = float(np.linalg.norm(values))
    if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
        raise StreamFormatError(f"{where}：特征必须为单位向量，实际范数 {norm:.6f}")


def load_stream(path: Path) -> Iterator[FrameInput]:
    """
    按顺序读取并校验检测流

    Args:
        path: 检测流文件；空文件视为空流

    Yields:
        FrameInput: 校验后的帧

    Raises:
        SchemaVersionError: 文件头不匹配
        StreamFormatError: 记录格式错误（消息包含行号与帧号）
        FrameOrderError: 帧号非严格递增
    """
    header: Optional[StreamHeader] = None
    last_id: Optional[int] = None
    feature_dim: Optional[int] = None
    for line_no, data in _read_lines(path, STREAM_FORMAT):
        if header is None:
            header = _parse(StreamHeader, data, f"{path} 文件头")
            feature_dim = header.feature_dim
            continue
        where = f"{path} 第 {line_no} 行（帧 {data.get('frame_id')}）"
        record = _parse(FrameRecord, data, where)
        if last_id is not None and record.frame_id <= last_id:
            raise FrameOrderError(f"{where}：帧号 {record.frame_id} 不大于上一帧 {last_id}")
        last_id = record.frame_id
        intrinsics_record = record.intrinsics or header.intrinsics
        if intrinsics_record is None:
            raise StreamFormatError(f"{where}：缺少相机内参且文件头没有默认内参")
        try:
            for proposal in record.proposals:
                _check_feature(proposal.feature, feature_dim, where)
                if feature_dim is None and proposal.feature is not None:
                    feature_dim = len(proposal.feature)
            frame = FrameInput(frame_id=record.frame_id, timestamp=record.timestamp,
                               intrinsics=intrinsics_record.to_model(),
                               world_from_cam=record.pose.to_model(),
                               proposals=tuple(p.to_model() for p in record.proposals))
        except StreamFormatError:
            raise
        except BoxFusionError as e:
            raise StreamFormatError(f"{where}：{e}") from e
        yield frame


def write_groundtruth(objects: Sequence[GroundTruthObject], path: Path) -> int:
    """写出真值物体，返回物体数"""
    with JsonLinesWriter(path, _header(GROUNDTRUTH_FORMAT)) as writer:
        for obj in objects:
            writer.write(GroundTruthRecord.from_model(obj))
    return len(objects)


def load_groundtruth(path: Path) -> List[GroundTruthObject]:
    """读取真值物体"""
    _, records = _records(path, GROUNDTRUTH_FORMAT, GroundTruthRecord)
    try:
        return [r.to_model() for r in records]
    except BoxFusionError as e:
        raise StreamFormatError(f"{path}：{e}") from e


def write_snapshot(snapshot: SceneSnapshot, path: Path) -> int:
    """写出场景快照，返回物体数"""
    with JsonLinesWriter(path, _header(SNAPSHOT_FORMAT)) as writer:
        for obj in snapshot.objects:
            writer.write(SnapshotRecord.from_model(obj))
    return len(snapshot)


def load_snapshot(path: Path) -> SceneSnapshot:
    """读取场景快照，物体按编号排序"""
    _, records = _records(path, SNAPSHOT_FORMAT, SnapshotRecord)
    try:
        objects = sorted((r.to_model() for r in records), key=lambda o: o.id)
    except BoxFusionError as e:
        raise StreamFormatError(f"{path}：{e}") from e
    return SceneSnapshot(tuple(objects))


def write_label_bank(queries: Sequence[TextQuery], path: Path) -> int:
    """写出标签库（label → embedding）"""
    with JsonLinesWriter(path, _header(LABELS_FORMAT)) as writer:
        for query in queries:
            writer.write(LabelRecord(label=query.label, embedding=query.embedding.tolist()))
    return len(queries)


def load_label_bank(path: Path) -> List[TextQuery]:
    """读取标签库，也用于读取单条文本查询"""
    _, records = _records(path, LABELS_FORMAT, LabelRecord)
    try:
        return [TextQuery(r.label, r.embedding) for r in records]
    except BoxFusionError as e:
        raise StreamFormatError(f"{path}：{e}") from e


def write_events(events: Iterable[Dict[str, Any]], path: Path) -> int:
    """写出逐帧事件日志（无文件头）"""
    count = 0
    with JsonLinesWriter(path) as writer:
        for event in events:
            writer.write(event)
            count += 1
    return count
