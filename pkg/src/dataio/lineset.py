from pathlib import Path

from ..geometry.transforms import BOX_EDGES, box_corners
from ..models.scene_state import SceneSnapshot


def write_lineset(snapshot: SceneSnapshot, path: Path) -> int:
    """
    以 Wavefront OBJ 线框导出快照：每个包围盒 8 个顶点、12 条棱

    Args:
        snapshot: 场景快照
        path: 输出路径

    Returns:
        int: 写出的包围盒数量
    """
    lines = ["# boxfusion lineset"]
    for index, obj in enumerate(snapshot.objects):
        lines.append(f"o object_{obj.id}")
        for corner in box_corners(obj.box).tolist():
            lines.append("v " + " ".join(repr(c) for c in corner))
        base = 8 * index + 1
        lines.extend(f"l {base + a} {base + b}" for a, b in BOX_EDGES)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(snapshot)
