"""Hemisphere camera sampling around an interaction point with visibility ranking."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .camera import Camera, look_at, project
from .mesh import TriMesh
from .raster import rasterize


@dataclass(frozen=True)
class CameraSamplingConfig:
    k: int = 16                 # views to return
    d: float = 2.0              # hemisphere radius, meters
    r: float = 0.15             # visibility patch radius, meters
    min_elevation: float = 10.0  # degrees above the horizon
    patch_samples: int = 256
    depth_tolerance: float = 0.01  # meters

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (self.d > self.r > 0):
            raise ValueError("require d > r > 0")
        if self.patch_samples < 1:
            raise ValueError("patch_samples must be >= 1")


def sample_patch_points(scene: TriMesh, p: np.ndarray, r: float, n: int,
                        seed: int = 0) -> np.ndarray:
    """Up to n uniform-area surface samples within distance r of p.

    Deterministic under the seed. Returns (m, 3) with m <= n; m can be zero
    when the scene has no surface near p.
    """
    p = np.asarray(p, dtype=np.float64)
    verts = scene.vertices
    faces = scene.faces
    if len(faces) == 0:
        return np.zeros((0, 3))
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    # candidate faces: bounding sphere of triangle intersects ball(p, r)
    centroid = (a + b + c) / 3.0
    rad = np.maximum.reduce([np.linalg.norm(a - centroid, axis=1),
                             np.linalg.norm(b - centroid, axis=1),
                             np.linalg.norm(c - centroid, axis=1)])
    cand = np.linalg.norm(centroid - p, axis=1) <= r + rad
    if not cand.any():
        return np.zeros((0, 3))
    a, b, c = a[cand], b[cand], c[cand]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    if areas.sum() <= 0:
        return np.zeros((0, 3))
    prob = areas / areas.sum()

    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    got = 0
    m = max(4 * n, 64)
    for _ in range(64):  # rejection batches, growing while acceptance is poor
        fi = rng.choice(len(prob), size=m, p=prob)
        u = rng.random(m)
        v = rng.random(m)
        flip = u + v > 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        pts = a[fi] + u[:, None] * (b[fi] - a[fi]) + v[:, None] * (c[fi] - a[fi])
        keep = np.linalg.norm(pts - p, axis=1) <= r
        if keep.any():
            accepted.append(pts[keep])
            got += int(keep.sum())
        if got >= n:
            break
        m = min(2 * m, 1 << 18)
    if not accepted:
        return np.zeros((0, 3))
    return np.concatenate(accepted)[:n]


def _depth_at(depth: np.ndarray, px: np.ndarray) -> np.ndarray:
    """Depth-buffer reference values at subpixel locations.

    Interpolates inverse depth bilinearly where all four neighbors are covered
    (exact on planar surfaces at any obliquity); falls back to the nearest
    pixel at silhouette boundaries. Uncovered lookups return +inf.
    """
    h, w = depth.shape
    u = np.clip(px[:, 0] - 0.5, 0.0, w - 1.0)
    v = np.clip(px[:, 1] - 0.5, 0.0, h - 1.0)
    x0 = np.clip(np.floor(u).astype(int), 0, w - 2)
    y0 = np.clip(np.floor(v).astype(int), 0, h - 2)
    fu = u - x0
    fv = v - y0
    d00 = depth[y0, x0]
    d10 = depth[y0, x0 + 1]
    d01 = depth[y0 + 1, x0]
    d11 = depth[y0 + 1, x0 + 1]
    finite = np.isfinite(d00) & np.isfinite(d10) & np.isfinite(d01) & np.isfinite(d11)
    with np.errstate(divide="ignore"):
        inv = ((1.0 / d00) * (1 - fu) * (1 - fv) + (1.0 / d10) * fu * (1 - fv)
               + (1.0 / d01) * (1 - fu) * fv + (1.0 / d11) * fu * fv)
    out = np.where(finite & (inv > 0), 1.0 / np.maximum(inv, 1e-300), np.inf)
    # nearest-pixel fallback where bilinear support is incomplete
    nearest = depth[np.clip(np.rint(px[:, 1] - 0.5).astype(int), 0, h - 1),
                    np.clip(np.rint(px[:, 0] - 0.5).astype(int), 0, w - 1)]
    return np.where(finite, out, nearest)


def visible_patch_ratio(scene: TriMesh, p: np.ndarray, r: float, camera: Camera,
                        cfg: CameraSamplingConfig, *,
                        patch_points: np.ndarray | None = None,
                        depth: np.ndarray | None = None) -> float:
    """Fraction of the surface patch around p whose depth survives the z-test."""
    if patch_points is None:
        patch_points = sample_patch_points(scene, p, r, cfg.patch_samples)
    if len(patch_points) == 0:
        warnings.warn("no scene surface within the patch radius of p",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    if depth is None:
        depth, _ = rasterize(scene, camera)
    px, valid = project(camera, patch_points)
    z = camera.to_camera(patch_points)[:, 2]
    inside = (valid & (px[:, 0] >= 0) & (px[:, 0] < camera.width)
              & (px[:, 1] >= 0) & (px[:, 1] < camera.height))
    ref = _depth_at(depth, px)
    ok = inside & np.isfinite(ref) & (np.abs(ref - z) <= cfg.depth_tolerance)
    return float(ok.sum()) / float(len(patch_points))


def sample_cameras(scene: TriMesh, p: np.ndarray, cfg: CameraSamplingConfig,
                   seed: int = 0, *, width: int = 512, height: int = 512,
                   focal: float | None = None) -> list[Camera]:
    """Sample candidate viewpoints on the +z hemisphere around p and keep the
    k best by visible patch ratio.

    Candidates use uniform azimuth and cosine-weighted elevation above
    cfg.min_elevation (uniform over the spherical cap area). Deterministic
    under the seed. Returns fewer than k cameras (with a warning) when not
    enough candidates see the patch at all.
    """
    p = np.asarray(p, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n_cand = max(32, 4 * cfg.k)
    azimuth = rng.uniform(0.0, 2.0 * np.pi, size=n_cand)
    smin = np.sin(np.deg2rad(cfg.min_elevation))
    elev = np.arcsin(rng.uniform(smin, 1.0, size=n_cand))
    dirs = np.stack([np.cos(elev) * np.cos(azimuth),
                     np.cos(elev) * np.sin(azimuth),
                     np.sin(elev)], axis=1)
    positions = p + cfg.d * dirs

    patch = sample_patch_points(scene, p, cfg.r, cfg.patch_samples,
                                seed=seed ^ 0x5F5F)
    scored: list[tuple[float, int, Camera]] = []
    for i, pos in enumerate(positions):
        cam = look_at(pos, p, width=width, height=height, fx=focal, view_id=i)
        ratio = visible_patch_ratio(scene, p, cfg.r, cam, cfg, patch_points=patch)
        scored.append((ratio, i, cam))
    scored.sort(key=lambda t: (-t[0], t[1]))
    visible = [(ratio, cam) for ratio, _, cam in scored if ratio > 0.0]
    if len(visible) < cfg.k:
        warnings.warn(f"only {len(visible)} of the requested {cfg.k} viewpoints "
                      "see the interaction patch", RuntimeWarning, stacklevel=2)
    chosen = [cam for _, cam in visible[:cfg.k]]
    return [Camera(fx=c.fx, fy=c.fy, cx=c.cx, cy=c.cy, rotation=c.rotation,
                   translation=c.translation, width=c.width, height=c.height,
                   view_id=i) for i, c in enumerate(chosen)]
