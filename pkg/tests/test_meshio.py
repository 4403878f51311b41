"""PLY/OBJ round trips and the point-cloud loaders."""

import numpy as np
import pytest

from primfit.errors import ParseError
from primfit.meshing import triangulate_grid
from primfit.meshio import (export_mesh, import_meshes, ply_mesh_bytes,
                            read_cloud_ply, read_ply_meshes, write_cloud_ply,
                            write_obj_meshes, write_ply_meshes)


def demo_meshes(seed=30):
    rng = np.random.default_rng(seed)
    m1 = triangulate_grid(rng.normal(size=(3, 4, 3)), "alpha")
    m2 = triangulate_grid(rng.normal(size=(2, 5, 3)), "beta two")
    return [m1, m2]


class TestCloudPly:
    def test_ascii_roundtrip(self, tmp_path):
        pts = np.array([[0.0, 1.5, -2.25], [3.125, 4.0, 5.5], [0.1, 0.2, 0.3]])
        path = tmp_path / "c.ply"
        write_cloud_ply(pts, path, binary=False)
        cloud = read_cloud_ply(path)
        assert len(cloud) == 3
        assert np.allclose(cloud.points, pts, atol=1e-7)

    def test_binary_equals_ascii(self, tmp_path):
        """The two encodings of one cloud parse to the identical Project
        inputs (float32 canonicalization)."""
        rng = np.random.default_rng(31)
        pts = rng.normal(size=(64, 3))
        colors = rng.integers(0, 256, size=(64, 3), dtype=np.uint8)
        a, b = tmp_path / "a.ply", tmp_path / "b.ply"
        write_cloud_ply(pts, a, binary=False, colors=colors)
        write_cloud_ply(pts, b, binary=True, colors=colors)
        ca, cb = read_cloud_ply(a), read_cloud_ply(b)
        assert np.array_equal(ca.points, cb.points)
        assert np.array_equal(ca.colors, cb.colors)

    def test_three_point_ascii_literal(self, tmp_path):
        path = tmp_path / "c.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 3\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n0 0 0\n1 0 0\n0 1 0\n")
        cloud = read_cloud_ply(path)
        assert len(cloud) == 3 and cloud.colors is None

    def test_nan_coordinate_names_element(self, tmp_path):
        path = tmp_path / "c.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 2\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n0 0 0\n1 nan 0\n")
        with pytest.raises(ParseError, match="vertex 1"):
            read_cloud_ply(path)

    def test_truncated_data(self, tmp_path):
        path = tmp_path / "c.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 3\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n0 0 0\n")
        with pytest.raises(ParseError):
            read_cloud_ply(path)

    def test_not_a_ply(self, tmp_path):
        path = tmp_path / "c.ply"
        path.write_text("solid nope\n")
        with pytest.raises(ParseError):
            read_cloud_ply(path)

    def test_double_precision_properties(self, tmp_path):
        path = tmp_path / "c.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\n"
                        "property double x\nproperty double y\nproperty double z\n"
                        "end_header\n0.1 0.2 0.3\n")
        cloud = read_cloud_ply(path)
        assert cloud.points[0, 0] == 0.1  # no float32 rounding for doubles


class TestMeshPly:
    def test_single_triangle_counts(self, tmp_path):
        v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        mesh = triangulate_grid(np.array([[v[0], v[1]], [v[2], v[2] + (0, 0, 1)]]))
        path = tmp_path / "m.ply"
        write_ply_meshes([mesh], path)
        got = read_ply_meshes(path)
        assert len(got) == 1
        assert got[0].n_vertices == mesh.n_vertices
        assert got[0].n_faces == mesh.n_faces

    @pytest.mark.parametrize("binary", [True, False])
    def test_export_import_export_byte_identical(self, tmp_path, binary):
        meshes = demo_meshes()
        p1 = tmp_path / "m1.ply"
        write_ply_meshes(meshes, p1, binary=binary)
        back = read_ply_meshes(p1)
        p2 = tmp_path / "m2.ply"
        write_ply_meshes(back, p2, binary=binary)
        assert p1.read_bytes() == p2.read_bytes()

    def test_two_meshes_split_with_tags(self, tmp_path):
        meshes = demo_meshes()
        path = tmp_path / "m.ply"
        write_ply_meshes(meshes, path)
        back = read_ply_meshes(path)
        assert len(back) == 2
        assert back[0].source_tag == "alpha"
        assert back[1].source_tag == "beta_two"
        for orig, got in zip(meshes, back):
            assert got.n_vertices == orig.n_vertices
            assert np.allclose(got.vertices, orig.vertices, atol=1e-6)
            assert np.array_equal(got.faces, orig.faces)

    def test_foreign_ply_single_mesh(self, tmp_path):
        path = tmp_path / "f.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 3\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "element face 1\nproperty list uchar int vertex_indices\n"
                        "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        back = read_ply_meshes(path)
        assert len(back) == 1 and back[0].n_faces == 1
        assert back[0].source_tag == "imported"

    def test_mesh_bytes_deterministic(self):
        meshes = demo_meshes()
        assert ply_mesh_bytes(meshes) == ply_mesh_bytes(demo_meshes())


class TestObj:
    def test_roundtrip_with_groups(self, tmp_path):
        meshes = demo_meshes()
        path = tmp_path / "m.obj"
        write_obj_meshes(meshes, path)
        back = import_meshes(path)
        assert [m.source_tag for m in back] == ["alpha", "beta_two"]
        for orig, got in zip(meshes, back):
            assert np.allclose(got.vertices, orig.vertices, atol=1e-6)
            assert np.array_equal(got.faces, orig.faces)
        # face indices offset correctly across groups
        text = path.read_text()
        assert text.count("g ") == 2

    def test_export_import_export_byte_identical(self, tmp_path):
        meshes = demo_meshes()
        p1, p2 = tmp_path / "a.obj", tmp_path / "b.obj"
        write_obj_meshes(meshes, p1)
        write_obj_meshes(import_meshes(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_export_mesh_dispatch(self, tmp_path):
        meshes = demo_meshes()
        ply = export_mesh(meshes, "ply", tmp_path / "x.ply")
        obj = export_mesh(meshes, "obj", tmp_path / "x.obj")
        assert len(import_meshes(ply)) == 2
        assert len(import_meshes(obj)) == 2
        with pytest.raises(ValueError):
            export_mesh(meshes, "stl", tmp_path / "x.stl")
