import numpy as np

from src.dataio.lineset import write_lineset
from src.geometry.transforms import box_corners
from src.models.box import OrientedBox3D
from src.models.scene_state import SceneSnapshot, SnapshotObject


class TestLineset:
    def test_obj_structure(self, tmp_path):
        """测试每个包围盒写出 8 个顶点与 12 条棱，索引连续"""
        boxes = [OrientedBox3D.axis_aligned([0, 0, 0], [1, 1, 1]), OrientedBox3D.axis_aligned([3, 0, 0], [1, 2, 1])]
        snapshot = SceneSnapshot(tuple(SnapshotObject(i * 4, box, 0.5, 1) for i, box in enumerate(boxes)))
        path = tmp_path / "boxes.obj"
        assert write_lineset(snapshot, path) == 2
        lines = path.read_text(encoding="utf-8").splitlines()
        assert [line for line in lines if line.startswith("o ")] == ["o object_0", "o object_4"]
        vertices = np.array([[float(v) for v in line.split()[1:]] for line in lines if line.startswith("v ")])
        edges = [tuple(int(i) for i in line.split()[1:]) for line in lines if line.startswith("l ")]
        assert vertices.shape == (16, 3)
        assert len(edges) == 24
        assert np.array_equal(vertices[8:], box_corners(boxes[1]))
        assert min(min(e) for e in edges[12:]) == 9 and max(max(e) for e in edges[12:]) == 16

    def test_empty(self, tmp_path):
        """测试空快照只写出注释行"""
        path = tmp_path / "empty.obj"
        assert write_lineset(SceneSnapshot(), path) == 0
        assert path.read_text(encoding="utf-8") == "# boxfusion lineset\n"
