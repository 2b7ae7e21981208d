import numpy as np
import pytest

from poselift.scene import (
    MeshError,
    TriMesh,
    load_mesh,
    save_obj,
    save_ply,
)

from helpers import make_box, random_tri_mesh


def test_trimesh_shapes_and_dtypes():
    m = make_box([0, 0, 0], [1, 1, 1])
    assert m.vertices.dtype == np.float64
    assert m.faces.dtype == np.int64
    assert m.n_vertices == 8
    assert m.n_faces == 12


def test_trimesh_rejects_bad_vertices():
    with pytest.raises(MeshError):
        TriMesh(np.zeros((4, 2)), np.zeros((1, 3), dtype=np.int64))


def test_trimesh_rejects_bad_faces_shape():
    with pytest.raises(MeshError):
        TriMesh(np.zeros((4, 3)), np.array([[0, 1, 2, 3]]))


def test_trimesh_rejects_out_of_range_index():
    with pytest.raises(MeshError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))
    with pytest.raises(MeshError):
        TriMesh(np.zeros((3, 3)), np.array([[0, -1, 2]]))


def test_trimesh_arrays_read_only():
    m = make_box([0, 0, 0], [1, 1, 1])
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0
    with pytest.raises(ValueError):
        m.faces[0, 0] = 0


def test_face_areas_unit_box():
    m = make_box([0, 0, 0], [1, 1, 1])
    # each square side splits into two right triangles of area 0.5
    assert np.allclose(m.face_areas(), 0.5)


def test_drop_degenerate_removes_zero_area():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]], dtype=np.float64)
    f = np.array([[0, 1, 2], [0, 1, 3], [1, 1, 2]])  # second collinear, third repeated
    m = TriMesh(v, f).drop_degenerate()
    assert m.n_faces == 1
    assert np.array_equal(m.faces[0], [0, 1, 2])


def test_bounds():
    m = make_box([-1, -2, -3], [4, 5, 6])
    lo, hi = m.bounds()
    assert np.array_equal(lo, [-1, -2, -3])
    assert np.array_equal(hi, [4, 5, 6])


def test_bounds_empty_mesh_raises():
    m = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    with pytest.raises(MeshError):
        m.bounds()


def test_transformed_rotation_translation():
    m = make_box([0, 0, 0], [1, 1, 1])
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = np.array([1.0, 2.0, 3.0])
    out = m.transformed(rotation=rot, translation=t)
    assert np.allclose(out.vertices, m.vertices @ rot.T + t)
    assert np.array_equal(out.faces, m.faces)


def test_obj_round_trip_bitwise(tmp_path):
    m = random_tri_mesh(40, seed=3)
    p1 = tmp_path / "a.obj"
    p2 = tmp_path / "b.obj"
    save_obj(m, p1)
    loaded = load_mesh(p1)
    # repr round trip keeps float64 exact
    assert np.array_equal(loaded.vertices, m.vertices)
    assert np.array_equal(loaded.faces, m.faces)
    save_obj(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_ply_round_trip_bitwise(tmp_path):
    m = random_tri_mesh(40, seed=4)
    p1 = tmp_path / "a.ply"
    p2 = tmp_path / "b.ply"
    save_ply(m, p1)
    loaded = load_mesh(p1)
    # float32 storage, so compare to the float32 cast of the source
    assert np.array_equal(loaded.vertices, m.vertices.astype("<f4").astype(np.float64))
    assert np.array_equal(loaded.faces, m.faces)
    save_ply(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_obj_loads_polygons_as_fans(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "f 1 2 3 4\n"
    )
    m = load_mesh(p)
    assert m.n_faces == 2
    assert np.array_equal(m.faces, [[0, 1, 2], [0, 2, 3]])


def test_obj_negative_indices(tmp_path):
    p = tmp_path / "neg.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        "f -3 -2 -1\n"
    )
    m = load_mesh(p)
    assert np.array_equal(m.faces, [[0, 1, 2]])


def test_obj_slash_indices(tmp_path):
    p = tmp_path / "tex.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        "vt 0 0\nvn 0 0 1\n"
        "f 1/1/1 2/1/1 3/1/1\n"
    )
    m = load_mesh(p)
    assert np.array_equal(m.faces, [[0, 1, 2]])


def test_load_drops_degenerate_faces(tmp_path):
    p = tmp_path / "degen.obj"
    p.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        "f 1 2 3\nf 1 1 2\n"
    )
    m = load_mesh(p)
    assert m.n_faces == 1


def test_unsupported_extension(tmp_path):
    p = tmp_path / "mesh.stl"
    p.write_text("solid x\n")
    with pytest.raises(MeshError):
        load_mesh(p)


def test_empty_obj_raises(tmp_path):
    p = tmp_path / "empty.obj"
    p.write_text("# nothing\n")
    with pytest.raises(MeshError):
        load_mesh(p)


def test_ply_rejects_ascii_format(tmp_path):
    p = tmp_path / "ascii.ply"
    p.write_bytes(b"ply\nformat ascii 1.0\nelement vertex 0\nend_header\n")
    with pytest.raises(MeshError):
        load_mesh(p)


def test_ply_missing_header_raises(tmp_path):
    p = tmp_path / "trunc.ply"
    p.write_bytes(b"ply\nformat binary_little_endian 1.0\n")
    with pytest.raises(MeshError):
        load_mesh(p)
