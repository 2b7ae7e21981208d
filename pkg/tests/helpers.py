"""Shared fixtures: procedural scenes and cached assets for the test suite."""

from __future__ import annotations

import numpy as np

from poselift.body.capsule import capsule_person
from poselift.scene.mesh import TriMesh
from poselift.scene.sdf import build_sdf

_CACHE: dict = {}


def make_box(lo, hi) -> TriMesh:
    """Closed axis-aligned box with outward-facing triangles."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    v = np.array([
        [lo[0], lo[1], lo[2]], [hi[0], lo[1], lo[2]],
        [hi[0], hi[1], lo[2]], [lo[0], hi[1], lo[2]],
        [lo[0], lo[1], hi[2]], [hi[0], lo[1], hi[2]],
        [hi[0], hi[1], hi[2]], [lo[0], hi[1], hi[2]],
    ])
    f = np.array([
        [0, 2, 1], [0, 3, 2],          # bottom (z = lo), outward -z
        [4, 5, 6], [4, 6, 7],          # top (z = hi), outward +z
        [0, 1, 5], [0, 5, 4],          # y = lo
        [1, 2, 6], [1, 6, 5],          # x = hi
        [2, 3, 7], [2, 7, 6],          # y = hi
        [3, 0, 4], [3, 4, 7],          # x = lo
    ])
    return TriMesh(vertices=v, faces=f)


def merge_meshes(meshes) -> TriMesh:
    verts, faces, base = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + base)
        base += m.n_vertices
    return TriMesh(vertices=np.concatenate(verts), faces=np.concatenate(faces))


def ground_scene(extent: float = 2.0, thickness: float = 0.2) -> TriMesh:
    return make_box([-extent, -extent, -thickness], [extent, extent, 0.0])


def bench_scene() -> TriMesh:
    """Ground slab plus a bench-height seat box."""
    return merge_meshes([
        ground_scene(),
        make_box([-0.8, -0.25, 0.0], [0.8, 0.25, 0.45]),
    ])


def stool_scene() -> TriMesh:
    return merge_meshes([
        ground_scene(),
        make_box([-0.22, -0.22, 0.0], [0.22, 0.22, 0.50]),
    ])


def ground_box_scene() -> TriMesh:
    """Open ground with a crate off to the side."""
    return merge_meshes([
        ground_scene(),
        make_box([0.9, 0.9, 0.0], [1.5, 1.5, 0.55]),
    ])


def cached_model():
    if "model" not in _CACHE:
        _CACHE["model"] = capsule_person(seed=0)
    return _CACHE["model"]


def cached_ground_sdf(dims: int = 48):
    key = ("ground_sdf", dims)
    if key not in _CACHE:
        _CACHE[key] = build_sdf(ground_scene(), (dims,) * 3, 0.2)
    return _CACHE[key]


def gram_schmidt_oracle(r6: np.ndarray) -> np.ndarray:
    """Independent 6D-to-rotation reference (columns b1, b2, b1 x b2)."""
    a1, a2 = r6[:3], r6[3:]
    b1 = a1 / np.linalg.norm(a1)
    res = a2 - (b1 @ a2) * b1
    b2 = res / np.linalg.norm(res)
    return np.stack([b1, b2, np.cross(b1, b2)], axis=1)


def quat_rotation_oracle(aa: np.ndarray) -> np.ndarray:
    """Axis-angle to matrix through the unit quaternion, coded separately."""
    angle = np.linalg.norm(aa)
    if angle < 1e-16:
        return np.eye(3)
    w = np.cos(angle / 2.0)
    x, y, z = np.sin(angle / 2.0) * (aa / angle)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def chain_joint_positions(model, params) -> np.ndarray:
    """World joint positions by plain recursive kinematics (no skinning)."""
    shaped = model.template_vertices + model.shape_blends @ params.phi
    rest_j = model.joint_regressor @ shaped
    theta_hat = (model.pose_decoder @ params.theta).reshape(-1, 3)
    n_joints = len(model.parents)
    g_rot = [np.eye(3)] * n_joints
    g_pos = [np.zeros(3)] * n_joints
    g_pos[0] = rest_j[0]
    for j in range(1, n_joints):
        p = int(model.parents[j])
        g_rot[j] = g_rot[p] @ quat_rotation_oracle(theta_hat[j - 1])
        g_pos[j] = g_pos[p] + g_rot[p] @ (rest_j[j] - rest_j[p])
    g = gram_schmidt_oracle(params.rot6d)
    return np.asarray(g_pos) @ g.T + params.trans


def random_tri_mesh(n_tris: int, seed: int, spread: float = 1.0) -> TriMesh:
    """Random triangle soup with some coincident vertices so adjacency
    filtering gets exercised."""
    rng = np.random.default_rng(seed)
    n_verts = max(4, int(n_tris * 1.5))
    verts = spread * rng.standard_normal((n_verts, 3))
    faces = rng.integers(0, n_verts, size=(n_tris, 3))
    # rebuild degenerate rows (repeated vertex index) until valid
    for _ in range(64):
        bad = ((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
               | (faces[:, 0] == faces[:, 2]))
        if not bad.any():
            break
        faces[bad] = rng.integers(0, n_verts, size=(int(bad.sum()), 3))
    return TriMesh(vertices=verts, faces=faces[~bad] if bad.any() else faces)
