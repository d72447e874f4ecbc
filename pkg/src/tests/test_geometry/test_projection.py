import numpy as np
import pytest

from src.geometry.projection import clip_to_image, project_box_hull, project_points
from src.models.box import Intrinsics, OrientedBox3D, Pose


@pytest.fixture
def intrinsics():
    return Intrinsics(fx=100.0, fy=100.0, cx=100.0, cy=100.0, width=200, height=200)


class TestProjectBoxHull:
    def test_cube_in_front(self, intrinsics):
        """测试深度 2 处的单位立方体投影为近端面正方形"""
        hull = project_box_hull(intrinsics, Pose.identity(), OrientedBox3D.axis_aligned([0, 0, 2], [1, 1, 1]))
        assert len(hull) == 4
        expected = {(100 + s * 100 / 3, 100 + t * 100 / 3) for s in (-1, 1) for t in (-1, 1)}
        got = {tuple(np.round(v, 9)) for v in hull.vertices}
        assert got == {tuple(np.round(v, 9)) for v in expected}
        assert hull.area == pytest.approx((200 / 3) ** 2)

    def test_behind_camera(self, intrinsics):
        """测试相机后方的盒不可见"""
        assert project_box_hull(intrinsics, Pose.identity(),
                                OrientedBox3D.axis_aligned([0, 0, -2], [1, 1, 1])) is None

    def test_straddling_near_plane(self, intrinsics):
        """测试跨越近平面的盒不可见"""
        assert project_box_hull(intrinsics, Pose.identity(),
                                OrientedBox3D.axis_aligned([0, 0, 0.3], [1, 1, 1])) is None

    def test_not_clipped_to_image(self, intrinsics):
        """测试位于图像外的盒仍返回凸包"""
        hull = project_box_hull(intrinsics, Pose.identity(), OrientedBox3D.axis_aligned([10, 0, 2], [1, 1, 1]))
        assert hull is not None
        assert hull.vertices[:, 0].min() > 200

    def test_camera_transform(self, intrinsics):
        """测试 cam_from_world 先于投影应用"""
        world_from_cam = Pose(np.array([1.0, 0, 0, 0]), [0, 0, -3])
        box = OrientedBox3D.axis_aligned([0, 0, -1], [1, 1, 1])
        hull = project_box_hull(intrinsics, world_from_cam.inverse(), box)
        reference = project_box_hull(intrinsics, Pose.identity(), OrientedBox3D.axis_aligned([0, 0, 2], [1, 1, 1]))
        assert hull.area == pytest.approx(reference.area)

    def test_project_points_principal_axis(self, intrinsics):
        """测试光轴上的点投影到主点"""
        assert np.allclose(project_points(intrinsics, np.array([0.0, 0.0, 5.0])), [100.0, 100.0])


class TestClipToImage:
    def test_none_passthrough(self, intrinsics):
        """测试不可见的凸包保持 None"""
        assert clip_to_image(None, intrinsics) is None

    def test_partially_outside(self, intrinsics):
        """测试部分位于图像外的凸包只保留图像内部分"""
        hull = project_box_hull(intrinsics, Pose.identity(), OrientedBox3D.axis_aligned([1.5, 0, 2], [1, 1, 1]))
        clipped = clip_to_image(hull, intrinsics)
        assert hull.vertices[:, 0].max() > 200
        assert clipped.vertices[:, 0].max() == pytest.approx(200.0)
        assert 0.0 < clipped.area < hull.area

    def test_fully_outside(self, intrinsics):
        """测试完全位于图像外的凸包裁剪后退化"""
        hull = project_box_hull(intrinsics, Pose.identity(), OrientedBox3D.axis_aligned([10, 0, 2], [1, 1, 1]))
        assert clip_to_image(hull, intrinsics).is_degenerate
