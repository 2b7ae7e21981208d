"""Procedural humanoid test asset.

Builds a segmented tube-person (~600 vertices, 22 joints) with analytic
skinning weights, a joint regressor that reproduces the rest joints exactly,
and a seeded orthonormal pose decoder. Body parts are separated by small gaps
so the rest pose has no self-intersections; each joint additionally carries a
tiny marker disk rigidly skinned to it, which is what the regressor averages.
Z is up, the pelvis sits at the origin, the character faces +x.
"""

from __future__ import annotations

import numpy as np

from .model import (
    N_BODY_JOINTS,
    N_JOINTS,
    N_POSE_OUT,
    N_SHAPE,
    N_THETA,
    BodyModel,
)

JOINT_NAMES = (
    "pelvis", "l_hip", "r_hip", "spine1", "l_knee", "r_knee", "spine2",
    "l_ankle", "r_ankle", "spine3", "l_foot", "r_foot", "neck", "l_collar",
    "r_collar", "head", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
    "l_wrist", "r_wrist",
)

PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19)

# lambda group: joints tied toward zero by an absolute prior (head, feet, wrists)
LAMBDA_JOINTS = (10, 11, 15, 20, 21)

REST_JOINTS = np.array([
    [0.00, 0.00, 0.00],     # pelvis
    [0.00, 0.09, -0.06],    # l_hip
    [0.00, -0.09, -0.06],   # r_hip
    [0.00, 0.00, 0.10],     # spine1
    [0.00, 0.10, -0.48],    # l_knee
    [0.00, -0.10, -0.48],   # r_knee
    [0.00, 0.00, 0.22],     # spine2
    [0.00, 0.10, -0.88],    # l_ankle
    [0.00, -0.10, -0.88],   # r_ankle
    [0.00, 0.00, 0.34],     # spine3
    [0.12, 0.10, -0.93],    # l_foot
    [0.12, -0.10, -0.93],   # r_foot
    [0.00, 0.00, 0.48],     # neck
    [0.00, 0.06, 0.42],     # l_collar
    [0.00, -0.06, 0.42],    # r_collar
    [0.00, 0.00, 0.62],     # head
    [0.00, 0.18, 0.44],     # l_shoulder
    [0.00, -0.18, 0.44],    # r_shoulder
    [0.00, 0.44, 0.44],     # l_elbow
    [0.00, -0.44, 0.44],    # r_elbow
    [0.00, 0.68, 0.44],     # l_wrist
    [0.00, -0.68, 0.44],    # r_wrist
])

RING_SEGMENTS = 8
MARKER_RADIUS = 0.008

# (joint_a, joint_b, radius, n_rings, t0, t1); tube spans t in [t0, t1] of the
# a->b segment, skinning blends a->b linearly in t, capped at both ends
_TUBES = (
    (0, 12, 0.090, 4, 0.02, 0.94),   # torso
    (12, 15, 0.042, 2, 0.15, 0.55),  # neck
    (1, 4, 0.052, 3, 0.12, 0.88),    # left thigh
    (2, 5, 0.052, 3, 0.12, 0.88),    # right thigh
    (4, 7, 0.043, 3, 0.12, 0.80),    # left shin
    (5, 8, 0.043, 3, 0.12, 0.80),    # right shin
    (7, 10, 0.033, 2, 0.30, 0.90),   # left foot
    (8, 11, 0.033, 2, 0.30, 0.90),   # right foot
    (16, 18, 0.038, 3, 0.12, 0.88),  # left upper arm
    (17, 19, 0.038, 3, 0.12, 0.88),  # right upper arm
    (18, 20, 0.032, 3, 0.12, 0.88),  # left forearm
    (19, 21, 0.032, 3, 0.12, 0.88),  # right forearm
)

_HEAD_CENTER_OFFSET = np.array([0.0, 0.0, 0.03])
_HEAD_RADIUS = 0.075


def _frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane perpendicular to axis."""
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(axis @ ref)) > 0.99:
        ref = np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, ref)
    u = u / np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


class _Builder:
    def __init__(self):
        self.verts: list[np.ndarray] = []
        self.faces: list[tuple[int, int, int]] = []
        # per-vertex skinning as (joint_a, joint_b, weight_b)
        self.skin: list[tuple[int, int, float]] = []

    def add_vertex(self, p, ja, jb, wb) -> int:
        self.verts.append(np.asarray(p, dtype=np.float64))
        self.skin.append((ja, jb, float(wb)))
        return len(self.verts) - 1

    def add_lathe(self, origin, axis, stations, ja, jb, weights,
                  cap_lo=True, cap_hi=True):
        """Stack of rings around origin + offset*axis; stations are
        (offset, radius) pairs ordered along the axis."""
        axis = axis / np.linalg.norm(axis)
        u, v = _frame(axis)
        angles = 2.0 * np.pi * np.arange(RING_SEGMENTS) / RING_SEGMENTS
        ring_ids = []
        for (off, rad), w in zip(stations, weights):
            center = origin + off * axis
            ids = [self.add_vertex(center + rad * (np.cos(a) * u + np.sin(a) * v), ja, jb, w)
                   for a in angles]
            ring_ids.append(ids)
        for lo, hi in zip(ring_ids[:-1], ring_ids[1:]):
            for m in range(RING_SEGMENTS):
                m2 = (m + 1) % RING_SEGMENTS
                self.faces.append((lo[m], lo[m2], hi[m2]))
                self.faces.append((lo[m], hi[m2], hi[m]))
        if cap_lo:
            off, _ = stations[0]
            c = self.add_vertex(origin + off * axis, ja, jb, weights[0])
            for m in range(RING_SEGMENTS):
                m2 = (m + 1) % RING_SEGMENTS
                self.faces.append((c, ring_ids[0][m2], ring_ids[0][m]))
        if cap_hi:
            off, _ = stations[-1]
            c = self.add_vertex(origin + off * axis, ja, jb, weights[-1])
            for m in range(RING_SEGMENTS):
                m2 = (m + 1) % RING_SEGMENTS
                self.faces.append((c, ring_ids[-1][m], ring_ids[-1][m2]))

    def add_tube(self, a, b, radius, n_rings, t0, t1, ja, jb):
        direction = b - a
        length = float(np.linalg.norm(direction))
        axis = direction / length
        ts = np.linspace(t0, t1, n_rings)
        stations = [(t * length, radius) for t in ts]
        self.add_lathe(a, axis, stations, ja, jb, list(ts))

    def add_sphere(self, center, radius, joint):
        polar = np.linspace(0.12, np.pi - 0.12, 5)
        stations = [(-radius * np.cos(p), radius * np.sin(p)) for p in polar]
        self.add_lathe(center, np.array([0.0, 0.0, 1.0]), stations,
                       joint, joint, [1.0] * len(polar))

    def add_marker(self, center, normal, joint) -> list[int]:
        """Tiny disk rigidly attached to one joint; its vertex average is the
        joint position, so the regressor can hit joints exactly."""
        normal = normal / np.linalg.norm(normal)
        u, v = _frame(normal)
        angles = 2.0 * np.pi * np.arange(RING_SEGMENTS) / RING_SEGMENTS
        rim = [self.add_vertex(center + MARKER_RADIUS * (np.cos(a) * u + np.sin(a) * v),
                               joint, joint, 1.0) for a in angles]
        c = self.add_vertex(center, joint, joint, 1.0)
        for m in range(RING_SEGMENTS):
            m2 = (m + 1) % RING_SEGMENTS
            self.faces.append((c, rim[m], rim[m2]))
        return rim + [c]


def _shape_blends(verts: np.ndarray) -> np.ndarray:
    """Ten smooth displacement bases over the template (girth, height, limb
    length, regional bumps). Magnitudes keep unit coefficients plausible."""
    n = len(verts)
    x, y, z = verts[:, 0], verts[:, 1], verts[:, 2]
    radial = verts.copy()
    radial[:, 2] = 0.0
    side = np.sign(y)[:, None] * np.array([0.0, 1.0, 0.0])
    up = np.array([0.0, 0.0, 1.0])
    head_c = REST_JOINTS[15] + _HEAD_CENTER_OFFSET

    def gauss(val, mu, sig):
        return np.exp(-0.5 * ((val - mu) / sig) ** 2)

    blends = np.zeros((n, 3, N_SHAPE))
    blends[:, :, 0] = 0.05 * radial
    blends[:, :, 1] = 0.06 * (z - z.min())[:, None] * up
    blends[:, :, 2] = 0.04 * (1.0 / (1.0 + np.exp(-(np.abs(y) - 0.3) * 10.0)))[:, None] * side
    blends[:, :, 3] = 0.05 * np.minimum(z + 0.2, 0.0)[:, None] * up
    blends[:, :, 4] = 0.05 * gauss(z, 0.25, 0.15)[:, None] * radial
    d_head = np.linalg.norm(verts - head_c, axis=1)
    blends[:, :, 5] = 0.2 * gauss(d_head, 0.0, 0.1)[:, None] * (verts - head_c)
    blends[:, :, 6] = 0.04 * gauss(z, 0.1, 0.08)[:, None] * np.array([1.0, 0.0, 0.0])
    blends[:, :, 7] = 0.03 * gauss(z, 0.44, 0.08)[:, None] * side
    blends[:, :, 8] = 0.03 * gauss(z, -0.1, 0.1)[:, None] * side
    blends[:, :, 9] = 0.02 * gauss(z, -0.9, 0.08)[:, None] * radial
    return blends


def _delta_signs() -> np.ndarray:
    """One-sided hinge signs for the non-lambda joints; a positive entry s
    penalizes s * angle > 0. Knees and elbows block hyperextension, the spine
    blocks back-bend, everything else gets a generic one-sided barrier."""
    signs = np.full((N_BODY_JOINTS, 3), -1.0)
    for j in LAMBDA_JOINTS:
        signs[j - 1] = 0.0
    for j, row in {
        4: (-1.0, 0.0, 0.0), 5: (-1.0, 0.0, 0.0),      # knees
        18: (0.0, -1.0, 0.0), 19: (0.0, 1.0, 0.0),     # elbows
        3: (1.0, 0.0, 0.0), 6: (1.0, 0.0, 0.0), 9: (1.0, 0.0, 0.0),  # spine
    }.items():
        signs[j - 1] = row
    return signs


def _pose_decoder(seed: int) -> np.ndarray:
    """Seeded column-orthonormal latent-to-angles map, scaled so unit latents
    give moderate joint rotations."""
    rng = np.random.default_rng(seed ^ 0x9E3779B9)
    q, _ = np.linalg.qr(rng.standard_normal((N_POSE_OUT, N_THETA)))
    return 0.5 * q


def capsule_person(seed: int = 0) -> BodyModel:
    """The default procedural body used by tests and the synthetic provider."""
    b = _Builder()
    rest = REST_JOINTS
    for ja, jb, radius, n_rings, t0, t1 in _TUBES:
        b.add_tube(rest[ja], rest[jb], radius, n_rings, t0, t1, ja, jb)
    b.add_sphere(rest[15] + _HEAD_CENTER_OFFSET, _HEAD_RADIUS, 15)

    marker_rows = []
    for j in range(N_JOINTS):
        p = PARENTS[j]
        normal = rest[j] - rest[p] if p >= 0 else np.array([0.0, 0.0, 1.0])
        if np.linalg.norm(normal) < 1e-9:
            normal = np.array([0.0, 0.0, 1.0])
        marker_rows.append(b.add_marker(rest[j], normal, j))

    verts = np.asarray(b.verts)
    faces = np.asarray(b.faces, dtype=np.int64)

    skinning = np.zeros((len(verts), N_JOINTS))
    for i, (ja, jb, wb) in enumerate(b.skin):
        skinning[i, ja] += 1.0 - wb
        skinning[i, jb] += wb

    regressor = np.zeros((N_JOINTS, len(verts)))
    for j, rows in enumerate(marker_rows):
        regressor[j, rows] = 1.0 / len(rows)

    return BodyModel(
        template_vertices=verts,
        faces=faces,
        joint_regressor=regressor,
        parents=np.asarray(PARENTS),
        skinning_weights=skinning,
        shape_blends=_shape_blends(verts),
        pose_decoder=_pose_decoder(seed),
        lambda_joints=LAMBDA_JOINTS,
        delta_signs=_delta_signs(),
        joint_names=JOINT_NAMES,
    )
