import numpy as np
import pytest

from poselift.scene import TriMesh, dilate_mask, look_at, rasterize

from helpers import make_box


def square_mesh(side, z_world, center=(0.0, 0.0)):
    """Two triangles forming an axis-aligned square in the plane z = z_world."""
    cx, cy = center
    h = side / 2.0
    v = np.array([
        [cx - h, cy - h, z_world],
        [cx + h, cy - h, z_world],
        [cx + h, cy + h, z_world],
        [cx - h, cy + h, z_world],
    ])
    return TriMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))


def frontal_camera(dist=2.0, width=256, height=256):
    """Looks down the world z axis at the origin from z = dist."""
    return look_at([0.0, 0.0, dist], [0.0, 0.0, 0.0], width=width, height=height)


def test_projected_area_matches_pinhole_prediction():
    cam = frontal_camera(dist=2.0, width=256, height=256)
    side = 0.5
    mesh = square_mesh(side, z_world=0.0)
    depth, sil = rasterize(mesh, cam)
    # a fronto-parallel square of side s at depth d covers (fx*s/d)^2 pixels
    want = (cam.fx * side / 2.0) ** 2
    got = int(sil.sum())
    assert abs(got - want) / want < 0.02


def test_depth_values_exact_for_frontal_plane():
    cam = frontal_camera(dist=2.0)
    depth, sil = rasterize(square_mesh(0.5, z_world=0.0), cam)
    assert sil.any()
    vals = depth[sil]
    assert np.max(np.abs(vals - 2.0)) < 1e-9


def test_silhouette_equals_finite_depth():
    cam = frontal_camera()
    depth, sil = rasterize(make_box([-0.3, -0.3, -0.3], [0.3, 0.3, 0.3]), cam)
    assert np.array_equal(sil, np.isfinite(depth))


def test_empty_mesh_renders_empty():
    cam = frontal_camera()
    depth, sil = rasterize(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)), cam)
    assert not sil.any()
    assert np.isinf(depth).all()


def test_z_test_keeps_nearer_surface():
    cam = frontal_camera(dist=2.0)
    near = square_mesh(0.4, z_world=0.5)   # depth 1.5
    far = square_mesh(0.8, z_world=0.0)    # depth 2.0, wider footprint
    both = TriMesh(
        np.vstack([near.vertices, far.vertices]),
        np.vstack([near.faces, far.faces + 4]),
    )
    depth, sil = rasterize(both, cam)
    cx, cy = int(cam.cx), int(cam.cy)
    # overlap region shows the nearer surface
    assert abs(depth[cy, cx] - 1.5) < 1e-9
    # a pixel covered only by the far square shows its depth
    px_near = cam.fx * 0.2 / 1.5
    px_far = cam.fx * 0.4 / 2.0
    assert px_far > px_near
    x_probe = int(cam.cx + (px_near + px_far) / 2)
    assert abs(depth[cy, x_probe] - 2.0) < 1e-9


def test_behind_camera_geometry_ignored():
    cam = frontal_camera(dist=2.0)
    depth, sil = rasterize(square_mesh(0.5, z_world=5.0), cam)  # behind the eye
    assert not sil.any()


def test_near_plane_clipping_splits_triangle():
    cam = look_at([2.0, 0.0, 0.5], [0.0, 0.0, 0.5], width=256, height=256)
    # two vertices 2 m in front, one 2 m behind the eye
    v = np.array([
        [0.0, -0.5, 0.2],
        [0.0, 0.5, 0.2],
        [4.0, 0.0, 0.5],
    ])
    mesh = TriMesh(v, np.array([[0, 1, 2]]))
    depth, sil = rasterize(mesh, cam)
    assert sil.sum() > 500  # clipped wedge sweeps a broad band of the image
    assert np.isfinite(depth[sil]).all()
    assert (depth[sil] > 0).all()
    assert (depth[sil] <= 2.0 + 1e-9).all()


def naive_dilate(mask, kernel):
    r = kernel // 2
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    for y in range(h):
        for x in range(w):
            y0, y1 = max(0, y - r), min(h, y + r + 1)
            x0, x1 = max(0, x - r), min(w, x + r + 1)
            out[y, x] = mask[y0:y1, x0:x1].any()
    return out


def test_dilate_matches_naive_sliding_window():
    rng = np.random.default_rng(0)
    mask = rng.random((40, 33)) < 0.05
    for kernel in (1, 3, 11):
        assert np.array_equal(dilate_mask(mask, kernel), naive_dilate(mask, kernel))


def test_dilate_single_pixel_block():
    mask = np.zeros((32, 32), dtype=bool)
    mask[16, 16] = True
    out = dilate_mask(mask, 11)
    want = np.zeros_like(mask)
    want[11:22, 11:22] = True
    assert np.array_equal(out, want)


def test_dilate_kernel_one_is_identity():
    rng = np.random.default_rng(1)
    mask = rng.random((20, 20)) < 0.3
    out = dilate_mask(mask, 1)
    assert np.array_equal(out, mask)
    assert out is not mask


def test_dilate_rejects_even_or_nonpositive_kernel():
    mask = np.zeros((4, 4), dtype=bool)
    with pytest.raises(ValueError):
        dilate_mask(mask, 2)
    with pytest.raises(ValueError):
        dilate_mask(mask, 0)
