"""Median-split AABB tree over triangles with a vectorized self-collision query.

The tree topology is built once from a reference pose; per-query the boxes are
refit to the current vertices (the optimizer calls this every step). The exact
triangle-triangle test is a separating-axis test over 17 axes (2 face normals,
9 edge cross products, 6 in-plane edge normals covering the coplanar case).
"""

from __future__ import annotations

import numpy as np

LEAF_SIZE = 4
_DEGENERATE_AXIS = 1e-16


def _tri_intersect_mask(tri_a: np.ndarray, tri_b: np.ndarray) -> np.ndarray:
    """Exact pairwise intersection test for (m,3,3) triangle arrays."""
    m = len(tri_a)
    if m == 0:
        return np.zeros(0, dtype=bool)
    ea = np.stack([tri_a[:, 1] - tri_a[:, 0],
                   tri_a[:, 2] - tri_a[:, 1],
                   tri_a[:, 0] - tri_a[:, 2]], axis=1)
    eb = np.stack([tri_b[:, 1] - tri_b[:, 0],
                   tri_b[:, 2] - tri_b[:, 1],
                   tri_b[:, 0] - tri_b[:, 2]], axis=1)
    na = np.cross(ea[:, 0], ea[:, 1])
    nb = np.cross(eb[:, 0], eb[:, 1])
    cross = np.cross(ea[:, :, None, :], eb[:, None, :, :]).reshape(m, 9, 3)
    inplane_a = np.cross(na[:, None, :], ea)
    inplane_b = np.cross(nb[:, None, :], eb)
    axes = np.concatenate([na[:, None, :], nb[:, None, :], cross,
                           inplane_a, inplane_b], axis=1)  # (m, 17, 3)
    usable = (axes * axes).sum(-1) > _DEGENERATE_AXIS
    pa = np.einsum("mnc,mvc->mnv", axes, tri_a)
    pb = np.einsum("mnc,mvc->mnv", axes, tri_b)
    sep = (pa.max(-1) < pb.min(-1)) | (pb.max(-1) < pa.min(-1))
    return ~(sep & usable).any(axis=1)


def _share_vertex(fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    return (fa[:, :, None] == fb[:, None, :]).any(axis=(1, 2))


class TriangleBvh:
    """AABB tree over a fixed triangle topology; boxes refit per query."""

    def __init__(self, faces: np.ndarray, vertices: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.leaf_size = int(leaf_size)
        if len(self.faces) == 0:
            raise ValueError("cannot build a BVH over zero triangles")
        centroids = np.asarray(vertices, dtype=np.float64)[self.faces].mean(axis=1)
        order = np.arange(len(self.faces))

        start, count, left, right, depth = [], [], [], [], []
        tasks = [(0, len(order), 0, -1, "l")]
        while tasks:
            lo, hi, d, parent, side = tasks.pop()
            node = len(start)
            if parent >= 0:
                (left if side == "l" else right)[parent] = node
            start.append(lo)
            count.append(hi - lo)
            depth.append(d)
            left.append(-1)
            right.append(-1)
            if hi - lo > self.leaf_size:
                sub = order[lo:hi]
                c = centroids[sub]
                axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
                mid = (hi - lo) // 2
                sel = np.argpartition(c[:, axis], mid, kind="introselect")
                order[lo:hi] = sub[sel]
                tasks.append((lo + mid, hi, d + 1, node, "r"))
                tasks.append((lo, lo + mid, d + 1, node, "l"))

        self.order = order
        self.start = np.asarray(start)
        self.count = np.asarray(count)
        self.left = np.asarray(left)
        self.right = np.asarray(right)
        self.is_leaf = self.left < 0
        self.depth = np.asarray(depth)
        leaves = np.flatnonzero(self.is_leaf)
        self.leaf_nodes = leaves[np.argsort(self.start[leaves], kind="stable")]
        dmax = int(self.depth.max())
        self.levels = [np.flatnonzero((self.depth == d) & ~self.is_leaf)
                       for d in range(dmax, -1, -1)]

    def refit(self, vertices: np.ndarray) -> np.ndarray:
        """Per-node (lo, hi) boxes for the given vertex positions."""
        tris = np.asarray(vertices, dtype=np.float64)[self.faces[self.order]]
        tri_lo = tris.min(axis=1)
        tri_hi = tris.max(axis=1)
        n = len(self.start)
        lo = np.empty((n, 3))
        hi = np.empty((n, 3))
        starts = self.start[self.leaf_nodes]
        lo[self.leaf_nodes] = np.minimum.reduceat(tri_lo, starts)
        hi[self.leaf_nodes] = np.maximum.reduceat(tri_hi, starts)
        for level in self.levels:
            if len(level):
                l, r = self.left[level], self.right[level]
                lo[level] = np.minimum(lo[l], lo[r])
                hi[level] = np.maximum(hi[l], hi[r])
        return np.stack([lo, hi], axis=1)

    def collide_self(self, vertices: np.ndarray) -> np.ndarray:
        """All non-adjacent intersecting triangle pairs, as a sorted (p, 2)
        index array with pair[0] < pair[1]."""
        boxes = self.refit(vertices)
        lo, hi = boxes[:, 0], boxes[:, 1]
        pairs = np.array([[0, 0]], dtype=np.int64)
        leaf_pairs = []
        while len(pairs):
            a, b = pairs[:, 0], pairs[:, 1]
            same = a == b
            overlap = (lo[a] <= hi[b]).all(-1) & (lo[b] <= hi[a]).all(-1)
            pairs = pairs[overlap | same]
            a, b = pairs[:, 0], pairs[:, 1]
            la, lb = self.is_leaf[a], self.is_leaf[b]
            done = la & lb
            if done.any():
                leaf_pairs.append(pairs[done])
            todo = pairs[~done]
            if not len(todo):
                break
            a, b = todo[:, 0], todo[:, 1]
            la, lb = self.is_leaf[a], self.is_leaf[b]
            same = a == b
            # internal self-pairs descend into both children plus their cross
            # pair; mixed pairs split the larger (or only) internal side
            ss = a[same]
            split_b = ~same & ~lb & (la | (self.count[b] >= self.count[a]))
            split_a = ~same & ~split_b
            ta = todo[split_a]
            tb = todo[split_b]
            pairs = np.concatenate([
                np.stack([self.left[ss], self.left[ss]], 1),
                np.stack([self.right[ss], self.right[ss]], 1),
                np.stack([self.left[ss], self.right[ss]], 1),
                np.stack([self.left[ta[:, 0]], ta[:, 1]], 1),
                np.stack([self.right[ta[:, 0]], ta[:, 1]], 1),
                np.stack([tb[:, 0], self.left[tb[:, 1]]], 1),
                np.stack([tb[:, 0], self.right[tb[:, 1]]], 1),
            ], axis=0)

        if not leaf_pairs:
            return np.zeros((0, 2), dtype=np.int64)
        # padded-grid expansion of every leaf pair into triangle candidates
        ab = np.concatenate(leaf_pairs)
        span = int(self.count[self.leaf_nodes].max())
        idx = np.arange(span)
        ii, jj = idx[None, :, None], idx[None, None, :]
        na = self.count[ab[:, 0]][:, None, None]
        nb = self.count[ab[:, 1]][:, None, None]
        valid = (ii < na) & (jj < nb)
        self_pair = (ab[:, 0] == ab[:, 1])[:, None, None]
        valid &= ~self_pair | (ii < jj)
        shape = valid.shape
        ia = np.broadcast_to(self.start[ab[:, 0]][:, None, None] + ii, shape)[valid]
        ib = np.broadcast_to(self.start[ab[:, 1]][:, None, None] + jj, shape)[valid]
        ca, cb = self.order[ia], self.order[ib]
        swap = ca > cb
        ca[swap], cb[swap] = cb[swap], ca[swap].copy()
        keys = np.unique(ca * len(self.faces) + cb)
        ca, cb = keys // len(self.faces), keys % len(self.faces)

        verts = np.asarray(vertices, dtype=np.float64)
        tris = verts[self.faces]
        tri_lo, tri_hi = tris.min(axis=1), tris.max(axis=1)
        near = ((tri_lo[ca] <= tri_hi[cb]) & (tri_lo[cb] <= tri_hi[ca])).all(-1)
        ca, cb = ca[near], cb[near]
        fa, fb = self.faces[ca], self.faces[cb]
        ok = ~_share_vertex(fa, fb)
        ca, cb, fa, fb = ca[ok], cb[ok], fa[ok], fb[ok]
        hit = _tri_intersect_mask(verts[fa], verts[fb])
        return np.stack([ca[hit], cb[hit]], axis=1)


def collide_brute_force(vertices: np.ndarray, faces: np.ndarray,
                        chunk: int = 65536) -> np.ndarray:
    """All-pairs reference query, chunked; same exact triangle test."""
    verts = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    ia, ib = np.triu_indices(len(faces), k=1)
    out = []
    for s in range(0, len(ia), chunk):
        ca, cb = ia[s:s + chunk], ib[s:s + chunk]
        fa, fb = faces[ca], faces[cb]
        ok = ~_share_vertex(fa, fb)
        ca, cb, fa, fb = ca[ok], cb[ok], fa[ok], fb[ok]
        hit = _tri_intersect_mask(verts[fa], verts[fb])
        out.append(np.stack([ca[hit], cb[hit]], axis=1))
    return np.concatenate(out, axis=0) if out else np.zeros((0, 2), dtype=np.int64)


def bvh_collisions(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Intersecting non-adjacent triangle pairs of one mesh (build + query)."""
    return TriangleBvh(faces, vertices).collide_self(vertices)
