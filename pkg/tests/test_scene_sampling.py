import numpy as np
import pytest

from poselift.scene import (
    CameraSamplingConfig,
    look_at,
    sample_cameras,
    sample_patch_points,
    visible_patch_ratio,
)

from helpers import ground_scene, make_box, merge_meshes


def test_config_validation():
    with pytest.raises(ValueError):
        CameraSamplingConfig(k=0)
    with pytest.raises(ValueError):
        CameraSamplingConfig(d=0.1, r=0.2)
    with pytest.raises(ValueError):
        CameraSamplingConfig(patch_samples=0)


def test_patch_points_on_surface_within_radius():
    scene = ground_scene()
    p = np.array([0.0, 0.0, 0.0])
    pts = sample_patch_points(scene, p, 0.15, 256)
    assert len(pts) == 256
    assert np.allclose(pts[:, 2], 0.0)  # top face only is within reach
    assert (np.linalg.norm(pts - p, axis=1) <= 0.15 + 1e-12).all()


def test_patch_points_deterministic():
    scene = ground_scene()
    p = np.array([0.1, -0.2, 0.0])
    a = sample_patch_points(scene, p, 0.15, 128, seed=5)
    b = sample_patch_points(scene, p, 0.15, 128, seed=5)
    c = sample_patch_points(scene, p, 0.15, 128, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_patch_points_empty_far_from_surface():
    scene = ground_scene()
    pts = sample_patch_points(scene, np.array([0.0, 0.0, 5.0]), 0.15, 64)
    assert len(pts) == 0


def test_patch_points_roughly_uniform_over_disk():
    # area density should be uniform: the inner half-radius disk holds ~1/4
    scene = ground_scene()
    p = np.array([0.0, 0.0, 0.0])
    pts = sample_patch_points(scene, p, 0.15, 4096, seed=1)
    frac = (np.linalg.norm(pts - p, axis=1) <= 0.075).mean()
    assert abs(frac - 0.25) < 0.03


def test_visible_ratio_unoccluded_plane_is_one():
    scene = ground_scene()
    p = np.array([0.0, 0.0, 0.0])
    cfg = CameraSamplingConfig(k=4)
    cams = sample_cameras(scene, p, cfg, seed=0)
    for cam in cams:
        assert visible_patch_ratio(scene, p, cfg.r, cam, cfg) == 1.0


def test_visible_ratio_zero_when_patch_buried():
    # p sits on the ground under a box: the z-test rejects every patch point
    scene = merge_meshes([ground_scene(), make_box([-0.5, -0.5, 0.0], [0.5, 0.5, 0.5])])
    p = np.array([0.0, 0.0, 0.0])
    cfg = CameraSamplingConfig(k=1)
    cam = look_at([1.5, 0.0, 1.5], p, width=512, height=512)
    assert visible_patch_ratio(scene, p, cfg.r, cam, cfg) == 0.0


def test_visible_ratio_warns_when_no_surface_near_p():
    scene = ground_scene()
    p = np.array([0.0, 0.0, 5.0])
    cfg = CameraSamplingConfig(k=1)
    cam = look_at([1.5, 0.0, 5.5], p, width=512, height=512)
    with pytest.warns(RuntimeWarning):
        ratio = visible_patch_ratio(scene, p, cfg.r, cam, cfg)
    assert ratio == 0.0


def test_visible_ratio_partially_occluded():
    # a low wall between camera and patch hides the near part of the disk:
    # the sight line to y on the ground crosses the wall plane at height
    # 2.0 * (1 - 1.2 / (1.2 + y)), which clears 0.3 only for y > 0.212
    scene = merge_meshes([
        ground_scene(),
        make_box([-2.0, -0.01, 0.0], [2.0, 0.01, 0.3]),  # thin wall along y = 0
    ])
    p = np.array([0.0, 0.3, 0.0])  # patch on the +y side, r = 0.15 clears the wall
    cfg = CameraSamplingConfig(k=1, r=0.15)
    cam = look_at([0.0, -1.2, 2.0], p, width=512, height=512)
    ratio = visible_patch_ratio(scene, p, cfg.r, cam, cfg)
    assert 0.1 < ratio < 0.95


def test_sample_cameras_deterministic_and_renumbered():
    scene = ground_scene()
    p = np.array([0.0, 0.0, 0.0])
    cfg = CameraSamplingConfig(k=6)
    a = sample_cameras(scene, p, cfg, seed=3)
    b = sample_cameras(scene, p, cfg, seed=3)
    assert len(a) == 6
    assert [c.view_id for c in a] == list(range(6))
    for ca, cb in zip(a, b):
        assert np.array_equal(ca.rotation, cb.rotation)
        assert np.array_equal(ca.translation, cb.translation)
    c = sample_cameras(scene, p, cfg, seed=4)
    assert any(not np.array_equal(ca.translation, cc.translation) for ca, cc in zip(a, c))


def test_sample_cameras_on_hemisphere():
    scene = ground_scene()
    p = np.array([0.2, -0.1, 0.0])
    cfg = CameraSamplingConfig(k=8, d=2.0, min_elevation=10.0)
    cams = sample_cameras(scene, p, cfg, seed=0)
    for cam in cams:
        off = cam.position - p
        assert abs(np.linalg.norm(off) - 2.0) < 1e-9
        elev = np.rad2deg(np.arcsin(off[2] / np.linalg.norm(off)))
        assert elev >= 10.0 - 1e-9


def test_sample_cameras_warns_when_too_few_visible():
    # patch sealed inside a box: nothing sees it
    scene = make_box([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5])
    p = np.array([0.0, 0.0, 0.0])
    cfg = CameraSamplingConfig(k=4, d=2.0)
    with pytest.warns(RuntimeWarning):
        cams = sample_cameras(scene, p, cfg, seed=0)
    assert cams == []


def test_sample_cameras_prefers_visibility():
    # a roof slab occludes steep views; all returned cameras still see the patch
    scene = merge_meshes([
        ground_scene(extent=3.0),
        make_box([-1.0, -1.0, 1.2], [1.0, 1.0, 1.4]),
    ])
    p = np.array([0.0, 0.0, 0.0])
    cfg = CameraSamplingConfig(k=4, d=2.0)
    cams = sample_cameras(scene, p, cfg, seed=1)
    for cam in cams:
        assert visible_patch_ratio(scene, p, cfg.r, cam, cfg) > 0.0
