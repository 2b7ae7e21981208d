import numpy as np
import pytest

from poselift.body import BodyParams, forward
from poselift.lifting import TriangleBvh, bvh_collisions, collide_brute_force
from poselift.lifting.bvh import _tri_intersect_mask

from helpers import cached_model, random_tri_mesh


# --- independent triangle-triangle oracle (edge-pierces-face formulation) ---


def _point_in_tri(x, a, b, c, n, tol=1e-12):
    for u, v in ((a, b), (b, c), (c, a)):
        if np.dot(np.cross(v - u, x - u), n) < -tol:
            return False
    return True


def _orient2d(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _coplanar_seg_tri(p, q, a, b, c, n):
    # project onto the dominant axis plane of n
    ax = int(np.argmax(np.abs(n)))
    keep = [i for i in range(3) if i != ax]
    p2, q2 = p[keep], q[keep]
    t2 = [a[keep], b[keep], c[keep]]
    # endpoint inside the 2D triangle
    sign = np.sign(_orient2d(t2[0], t2[1], t2[2]))
    if sign == 0:
        return False
    for x in (p2, q2):
        if all(sign * _orient2d(t2[i], t2[(i + 1) % 3], x) >= 0 for i in range(3)):
            return True
    # proper 2D segment crossing with any triangle edge
    for i in range(3):
        u, v = t2[i], t2[(i + 1) % 3]
        d1 = _orient2d(p2, q2, u)
        d2 = _orient2d(p2, q2, v)
        d3 = _orient2d(u, v, p2)
        d4 = _orient2d(u, v, q2)
        if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
            return True
    return False


def _seg_crosses_tri(p, q, a, b, c):
    n = np.cross(b - a, c - a)
    dp = float((p - a) @ n)
    dq = float((q - a) @ n)
    if dp > 0 and dq > 0:
        return False
    if dp < 0 and dq < 0:
        return False
    if dp == 0.0 and dq == 0.0:
        return _coplanar_seg_tri(p, q, a, b, c, n)
    t = dp / (dp - dq)
    x = p + t * (q - p)
    return _point_in_tri(x, a, b, c, n)


def tri_pair_intersect_oracle(t1, t2):
    """Two triangles intersect iff some edge of one pierces the other (the
    coplanar case reduces to 2D tests)."""
    for i in range(3):
        if _seg_crosses_tri(t1[i], t1[(i + 1) % 3], *t2):
            return True
        if _seg_crosses_tri(t2[i], t2[(i + 1) % 3], *t1):
            return True
    return False


def pair_set(arr):
    return set(map(tuple, np.asarray(arr).tolist()))


# --- exact test vs oracle ---


def test_intersect_mask_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(0)
    n = 400
    t1 = rng.uniform(-1, 1, (n, 3, 3))
    # second triangle near the first so a good fraction intersects
    t2 = t1 + rng.uniform(-0.8, 0.8, (n, 1, 3)) + 0.3 * rng.standard_normal((n, 3, 3))
    got = _tri_intersect_mask(t1, t2)
    want = np.array([tri_pair_intersect_oracle(t1[i], t2[i]) for i in range(n)])
    assert got.sum() > 40  # fixture sanity: both outcomes well represented
    assert (~got).sum() > 40
    assert np.array_equal(got, want)


def test_intersect_piercing_case():
    a = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=np.float64)
    b = np.array([[[0.2, 0.2, -0.5], [0.3, 0.2, 0.5], [0.2, 0.3, 0.5]]])
    assert _tri_intersect_mask(a, b)[0]


def test_intersect_separated_case():
    a = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=np.float64)
    b = a + np.array([0.0, 0.0, 0.1])
    assert not _tri_intersect_mask(a, b)[0]


def test_intersect_coplanar_overlapping():
    a = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=np.float64)
    b = np.array([[[0.1, 0.1, 0], [1.1, 0.1, 0], [0.1, 1.1, 0]]])
    assert _tri_intersect_mask(a, b)[0]
    assert tri_pair_intersect_oracle(a[0], b[0])


def test_intersect_coplanar_disjoint():
    a = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=np.float64)
    b = np.array([[[2.0, 2.0, 0], [3.0, 2.0, 0], [2.0, 3.0, 0]]])
    assert not _tri_intersect_mask(a, b)[0]
    assert not tri_pair_intersect_oracle(a[0], b[0])


def test_intersect_coplanar_contained():
    a = np.array([[[0, 0, 0], [4, 0, 0], [0, 4, 0]]], dtype=np.float64)
    b = np.array([[[0.5, 0.5, 0], [1.0, 0.5, 0], [0.5, 1.0, 0]]])
    assert _tri_intersect_mask(a, b)[0]
    assert tri_pair_intersect_oracle(a[0], b[0])


# --- tree queries vs brute force ---


@pytest.mark.parametrize("n_tris,seed", [(60, 0), (200, 1), (600, 2)])
def test_bvh_equals_brute_force_on_soups(n_tris, seed):
    mesh = random_tri_mesh(n_tris, seed=seed, spread=0.8)
    got = bvh_collisions(mesh.vertices, mesh.faces)
    want = collide_brute_force(mesh.vertices, mesh.faces)
    assert pair_set(got) == pair_set(want)
    assert (got[:, 0] < got[:, 1]).all()


def test_bvh_equals_brute_force_on_posed_body():
    model = cached_model()
    rng = np.random.default_rng(3)
    hits = 0
    for seed in range(4):
        params = BodyParams(theta=rng.standard_normal(32) * 1.2)
        verts, _ = forward(model, params)
        got = bvh_collisions(verts, model.faces)
        want = collide_brute_force(verts, model.faces)
        assert pair_set(got) == pair_set(want)
        hits += len(want)
    assert hits > 0  # at least one strongly posed body must self-collide


def test_bvh_reuse_across_poses():
    # topology built once, boxes refit per query
    model = cached_model()
    tree = TriangleBvh(model.faces, model.template_vertices)
    rng = np.random.default_rng(4)
    for _ in range(2):
        verts, _ = forward(model, BodyParams(theta=rng.standard_normal(32)))
        got = tree.collide_self(verts)
        want = collide_brute_force(verts, model.faces)
        assert pair_set(got) == pair_set(want)


def test_adjacent_triangles_never_reported():
    # two triangles sharing an edge, folded onto each other
    v = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, 1.0, 0.0],
        [0.5, 0.5, 0.0],  # folds back over the first triangle
    ])
    f = np.array([[0, 1, 2], [0, 1, 3]])
    assert len(bvh_collisions(v, f)) == 0
    assert len(collide_brute_force(v, f)) == 0


def test_refit_boxes_contain_triangles():
    mesh = random_tri_mesh(100, seed=5)
    tree = TriangleBvh(mesh.faces, mesh.vertices)
    boxes = tree.refit(mesh.vertices)
    tris = mesh.vertices[mesh.faces[tree.order]]
    for node in range(len(tree.start)):
        if not tree.is_leaf[node]:
            continue
        s, c = tree.start[node], tree.count[node]
        t = tris[s:s + c]
        assert (boxes[node, 0] <= t.min(axis=(0, 1)) + 1e-12).all()
        assert (boxes[node, 1] >= t.max(axis=(0, 1)) - 1e-12).all()
    # root encloses everything
    assert (boxes[0, 0] <= mesh.vertices.min(axis=0) + 1e-12).all()
    assert (boxes[0, 1] >= mesh.vertices.max(axis=0) - 1e-12).all()


def test_bvh_rejects_empty():
    with pytest.raises(ValueError):
        TriangleBvh(np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)))


def test_bvh_single_leaf_mesh():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0], [1, 0, 1], [0, 1, 1]])
    f = np.array([[0, 1, 2], [3, 4, 5]])
    assert len(bvh_collisions(v, f)) == 0
    # slide the second triangle down into the first
    v2 = v.copy()
    v2[3:, 2] = [-0.5, 0.5, 0.5]
    got = bvh_collisions(v2, f)
    want = collide_brute_force(v2, f)
    assert pair_set(got) == pair_set(want)
