"""Pinhole cameras: projection, look-at construction, and the camera text file."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_DEPTH = 1e-6  # meters; points at camera-space Z below this are invalid

DEFAULT_WIDTH = 512
DEFAULT_HEIGHT = 512


class CameraError(ValueError):
    pass


@dataclass(frozen=True)
class Camera:
    """World-to-camera pinhole camera (x right, y down, z forward)."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # (3, 3) world->camera, orthonormal
    translation: np.ndarray  # (3,) world->camera, meters
    width: int
    height: int
    view_id: int = 0

    def __post_init__(self):
        rot = np.ascontiguousarray(np.asarray(self.rotation, dtype=np.float64)).reshape(3, 3)
        tr = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        if self.fx <= 0 or self.fy <= 0:
            raise CameraError("focal lengths must be positive")
        if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-6:
            raise CameraError("rotation is not orthonormal within 1e-6")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)
        rot.setflags(write=False)
        tr.setflags(write=False)

    @property
    def position(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


def project(camera: Camera, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project world points to pixels.

    Returns (pixels (n, 2), valid (n,) bool); points with camera-space depth
    <= MIN_DEPTH are flagged invalid and their pixel values are unreliable.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pc = camera.to_camera(pts.reshape(-1, 3))
    z = pc[:, 2]
    valid = z > MIN_DEPTH
    zs = np.where(valid, z, 1.0)  # avoid divide warnings on invalid rows
    px = np.stack([camera.fx * pc[:, 0] / zs + camera.cx,
                   camera.fy * pc[:, 1] / zs + camera.cy], axis=1)
    if single:
        return px[0], valid[0]
    return px, valid


def unproject(camera: Camera, pixels: np.ndarray, depths: np.ndarray) -> np.ndarray:
    """Inverse of project for known camera-space depths."""
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    z = np.asarray(depths, dtype=np.float64).reshape(-1)
    xc = (px[:, 0] - camera.cx) / camera.fx * z
    yc = (px[:, 1] - camera.cy) / camera.fy * z
    pc = np.stack([xc, yc, z], axis=1)
    out = (pc - camera.translation) @ camera.rotation
    return out if np.asarray(pixels).ndim > 1 else out[0]


def look_at(eye: np.ndarray, target: np.ndarray, *, fx: float | None = None,
            fy: float | None = None, width: int = DEFAULT_WIDTH,
            height: int = DEFAULT_HEIGHT, up: np.ndarray = (0.0, 0.0, 1.0),
            view_id: int = 0) -> Camera:
    """Camera at `eye` looking toward `target`, image up aligned with world `up`.

    Default focal length equals the image width (~53 deg horizontal FOV).
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = target - eye
    norm = np.linalg.norm(fwd)
    if norm < 1e-12:
        raise CameraError("eye and target coincide")
    z_c = fwd / norm
    x_c = np.cross(z_c, up)
    if np.linalg.norm(x_c) < 1e-8:  # looking straight along up: fall back
        x_c = np.cross(z_c, np.array([1.0, 0.0, 0.0]))
        if np.linalg.norm(x_c) < 1e-8:
            x_c = np.cross(z_c, np.array([0.0, 1.0, 0.0]))
    x_c = x_c / np.linalg.norm(x_c)
    y_c = np.cross(z_c, x_c)
    rot = np.stack([x_c, y_c, z_c], axis=0)
    if fx is None:
        fx = float(width)
    if fy is None:
        fy = fx
    return Camera(fx=fx, fy=fy, cx=width / 2.0, cy=height / 2.0,
                  rotation=rot, translation=-rot @ eye,
                  width=width, height=height, view_id=view_id)


# --- camera text file -------------------------------------------------------
#
# One file holds any number of views:
#
#   # poselift cameras v1
#   camera <view_id>
#   size <width> <height>
#   intrinsics <fx> <fy> <cx> <cy>
#   rotation <r00> <r01> <r02> <r10> ... <r22>     (row-major, world->camera)
#   translation <tx> <ty> <tz>
#
# Floats are written with repr() so the round-trip is bit exact.

_MAGIC = "# poselift cameras v1"


def save_cameras(cameras: list[Camera], path: str | Path) -> None:
    lines = [_MAGIC]
    for cam in cameras:
        lines.append(f"camera {cam.view_id}")
        lines.append(f"size {cam.width} {cam.height}")
        lines.append(f"intrinsics {float(cam.fx)!r} {float(cam.fy)!r} "
                     f"{float(cam.cx)!r} {float(cam.cy)!r}")
        lines.append("rotation " + " ".join(repr(float(v)) for v in cam.rotation.ravel()))
        lines.append("translation " + " ".join(repr(float(v)) for v in cam.translation))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_cameras(path: str | Path) -> list[Camera]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise CameraError(f"{path}: not a poselift camera file")
    cams: list[Camera] = []
    cur: dict = {}

    def flush():
        if not cur:
            return
        for key in ("view_id", "size", "intrinsics", "rotation", "translation"):
            if key not in cur:
                raise CameraError(f"{path}: camera block missing {key}")
        fx, fy, cx, cy = cur["intrinsics"]
        cams.append(Camera(fx=fx, fy=fy, cx=cx, cy=cy,
                           rotation=np.array(cur["rotation"]).reshape(3, 3),
                           translation=np.array(cur["translation"]),
                           width=cur["size"][0], height=cur["size"][1],
                           view_id=cur["view_id"]))

    for ln in lines[1:]:
        parts = ln.split()
        key, vals = parts[0], parts[1:]
        if key == "camera":
            flush()
            cur = {"view_id": int(vals[0])}
        elif key == "size":
            cur["size"] = (int(vals[0]), int(vals[1]))
        elif key in ("intrinsics", "rotation", "translation"):
            cur[key] = [float(v) for v in vals]
        else:
            raise CameraError(f"{path}: unknown camera file key {key!r}")
    flush()
    return cams
