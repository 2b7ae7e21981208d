"""Per-view 2D pose hypotheses.

Each view contributes a set of 2D joint detections with confidences in some
detector layout; a JointMap bridges that layout to the 22 body joints. A
synthetic generator projects a ground-truth body through the cameras so the
full estimation stack is not needed for tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .body.model import N_JOINTS, BodyModel, BodyParams
from .body import forward
from .scene.camera import Camera, project

HYP_HEADER = "# poselift hypotheses v1"


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class JointMap:
    """Injective map from detector joint indices to body joint indices."""

    layout_id: str
    n_detector_joints: int
    pairs: tuple  # ((det_idx, body_idx), ...)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(d), int(b)) for d, b in self.pairs))
        det = [d for d, _ in self.pairs]
        body = [b for _, b in self.pairs]
        if len(set(body)) != len(body):
            raise HypothesisError(f"{self.layout_id}: joint map must be injective on body joints")
        if any(not 0 <= d < self.n_detector_joints for d in det):
            raise HypothesisError(f"{self.layout_id}: detector index out of range")
        if any(not 0 <= b < N_JOINTS for b in body):
            raise HypothesisError(f"{self.layout_id}: body index out of range")

    @property
    def detector_indices(self) -> np.ndarray:
        return np.array([d for d, _ in self.pairs], dtype=np.int64)

    @property
    def body_indices(self) -> np.ndarray:
        return np.array([b for _, b in self.pairs], dtype=np.int64)


_BODY22 = JointMap("body22", N_JOINTS, tuple((j, j) for j in range(N_JOINTS)))

# standard 17-keypoint detector order: nose, eyes, ears, shoulders, elbows,
# wrists, hips, knees, ankles; eyes and ears have no body counterpart
_COCO17 = JointMap("coco17", 17, (
    (0, 15),            # nose -> head
    (5, 16), (6, 17),   # shoulders
    (7, 18), (8, 19),   # elbows
    (9, 20), (10, 21),  # wrists
    (11, 1), (12, 2),   # hips
    (13, 4), (14, 5),   # knees
    (15, 7), (16, 8),   # ankles
))

LAYOUTS = {m.layout_id: m for m in (_BODY22, _COCO17)}


def get_joint_map(layout_id: str) -> JointMap:
    try:
        return LAYOUTS[layout_id]
    except KeyError:
        raise HypothesisError(f"unknown layout_id {layout_id!r}") from None


@dataclass
class PoseHypothesis:
    """2D joint detections for one view."""

    view_id: int
    joints2d: np.ndarray      # (m, 2) pixels
    confidence: np.ndarray    # (m,) in [0, 1]
    layout_id: str = "coco17"
    width: int = 512
    height: int = 512

    def __post_init__(self):
        self.joints2d = np.asarray(self.joints2d, dtype=np.float64).reshape(-1, 2)
        self.confidence = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if len(self.joints2d) != len(self.confidence):
            raise HypothesisError("joints2d and confidence must have equal length")
        if not np.isfinite(self.joints2d).all() or not np.isfinite(self.confidence).all():
            raise HypothesisError("non-finite hypothesis values")
        if self.confidence.min(initial=0.0) < 0.0 or self.confidence.max(initial=0.0) > 1.0:
            raise HypothesisError("confidences must lie in [0, 1]")
        jm = get_joint_map(self.layout_id)
        if len(self.joints2d) != jm.n_detector_joints:
            raise HypothesisError(
                f"layout {self.layout_id} expects {jm.n_detector_joints} joints, "
                f"got {len(self.joints2d)}")

    @property
    def joint_map(self) -> JointMap:
        return get_joint_map(self.layout_id)


def save_hypotheses(hyps: list, path) -> None:
    lines = [HYP_HEADER]
    for h in hyps:
        lines.append(f"hypothesis {h.view_id}")
        lines.append(f"size {h.width} {h.height}")
        lines.append(f"layout {h.layout_id}")
        lines.append(f"joints {len(h.joints2d)}")
        for (x, y), c in zip(h.joints2d, h.confidence):
            lines.append(f"j {float(x)!r} {float(y)!r} {float(c)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_hypotheses(path) -> list:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != HYP_HEADER:
        raise HypothesisError(f"{path}: missing hypothesis file header")
    out: list[PoseHypothesis] = []
    cur: dict | None = None

    def flush():
        if cur is None:
            return
        if cur["n"] != len(cur["rows"]):
            raise HypothesisError(f"{path}: view {cur['view_id']} expects {cur['n']} joints, "
                                  f"got {len(cur['rows'])}")
        rows = np.array(cur["rows"]) if cur["rows"] else np.zeros((0, 3))
        out.append(PoseHypothesis(
            view_id=cur["view_id"],
            joints2d=rows[:, :2],
            confidence=rows[:, 2],
            layout_id=cur["layout"],
            width=cur["size"][0],
            height=cur["size"][1],
        ))

    for raw in lines[1:]:
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        key = parts[0]
        try:
            if key == "hypothesis":
                flush()
                cur = {"view_id": int(parts[1]), "size": (512, 512),
                       "layout": "coco17", "n": -1, "rows": []}
            elif cur is None:
                raise HypothesisError(f"{path}: record {key!r} before any hypothesis")
            elif key == "size":
                cur["size"] = (int(parts[1]), int(parts[2]))
            elif key == "layout":
                cur["layout"] = parts[1]
            elif key == "joints":
                cur["n"] = int(parts[1])
            elif key == "j":
                cur["rows"].append([float(parts[1]), float(parts[2]), float(parts[3])])
            else:
                raise HypothesisError(f"{path}: unknown record {key!r}")
        except (IndexError, ValueError) as e:
            if isinstance(e, HypothesisError):
                raise
            raise HypothesisError(f"{path}: malformed line {raw!r}") from e
    flush()
    return out


def synth_hypotheses(model: BodyModel, gt: BodyParams, cameras: list,
                     noise_px: float = 0.0, outlier_views=(), seed: int = 0,
                     layout_id: str = "body22") -> list:
    """Project the ground-truth joints through every camera, with optional
    pixel noise and whole-view outliers drawn from a random body. Confidence
    is 1 for joints in front of the camera and 0 behind; detector joints with
    no body counterpart get confidence 0. Deterministic given the seed."""
    if not cameras:
        raise HypothesisError("cameras must be nonempty")
    rng = np.random.default_rng(seed)
    _, joints = forward(model, gt)
    jm = get_joint_map(layout_id)
    outlier_views = set(int(v) for v in outlier_views)

    out = []
    for cam in cameras:
        if cam.view_id in outlier_views:
            rogue = BodyParams(
                rot6d=np.array([1.0, 0, 0, 0, 1.0, 0]) + 0.3 * rng.standard_normal(6),
                trans=gt.trans + 0.5 * rng.standard_normal(3),
                theta=rng.standard_normal(32),
                phi=0.5 * rng.standard_normal(10),
            )
            _, src = forward(model, rogue)
        else:
            src = joints
        pixels, valid = project(cam, src)
        kp = np.zeros((jm.n_detector_joints, 2))
        conf = np.zeros(jm.n_detector_joints)
        kp[jm.detector_indices] = pixels[jm.body_indices]
        conf[jm.detector_indices] = valid[jm.body_indices].astype(np.float64)
        if noise_px > 0:
            kp = kp + noise_px * rng.standard_normal(kp.shape)
        out.append(PoseHypothesis(cam.view_id, kp, conf, layout_id,
                                  width=cam.width, height=cam.height))
    return out
