"""Software z-buffer rasterization of depth and silhouettes, plus mask dilation."""

from __future__ import annotations

import numpy as np

from .camera import Camera
from .mesh import TriMesh

NEAR_PLANE = 1e-4  # meters; triangles are clipped against this camera-space depth

DEPTH_INF = np.inf  # sentinel for uncovered pixels


def _clip_near(tri: np.ndarray, z_near: float) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of one camera-space triangle against z >= z_near.

    Returns a list of 0..2 triangles (the clipped polygon, fan-triangulated).
    """
    inside = tri[:, 2] >= z_near
    n_in = int(inside.sum())
    if n_in == 3:
        return [tri]
    if n_in == 0:
        return []
    poly = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        ain, bin_ = inside[i], inside[(i + 1) % 3]
        if ain:
            poly.append(a)
        if ain != bin_:
            t = (z_near - a[2]) / (b[2] - a[2])
            poly.append(a + t * (b - a))
    return [np.stack([poly[0], poly[k], poly[k + 1]])
            for k in range(1, len(poly) - 1)]


def _raster_triangle(depth: np.ndarray, xy: np.ndarray, z: np.ndarray,
                     width: int, height: int) -> None:
    """Rasterize one screen-space triangle into the depth buffer (in place)."""
    lo = np.floor(xy.min(axis=0) - 0.5).astype(int)
    hi = np.ceil(xy.max(axis=0) - 0.5).astype(int)
    x0, y0 = max(lo[0], 0), max(lo[1], 0)
    x1, y1 = min(hi[0], width - 1), min(hi[1], height - 1)
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1) + 0.5
    ys = np.arange(y0, y1 + 1) + 0.5
    px, py = np.meshgrid(xs, ys)

    (ax, ay), (bx, by), (cx, cy) = xy
    area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if abs(area) < 1e-12:
        return
    # barycentric coordinates at pixel centers (sign-normalized by area)
    w0 = ((bx - px) * (cy - py) - (by - py) * (cx - px)) / area
    w1 = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) / area
    w2 = 1.0 - w0 - w1
    cover = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not cover.any():
        return
    # perspective-correct depth: 1/z interpolates linearly in screen space
    inv_z = w0 / z[0] + w1 / z[1] + w2 / z[2]
    with np.errstate(divide="ignore"):
        zpix = 1.0 / inv_z
    tile = depth[y0:y1 + 1, x0:x1 + 1]
    np.copyto(tile, zpix, where=cover & (zpix < tile))


def rasterize(mesh: TriMesh, camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Z-buffer the mesh from `camera`.

    Returns (depth, silhouette): depth is (h, w) float64 camera-space Z with
    +inf where nothing is drawn; silhouette is exactly depth < +inf.
    """
    h, w = camera.height, camera.width
    depth = np.full((h, w), DEPTH_INF, dtype=np.float64)
    if mesh.n_faces:
        cam_pts = mesh.vertices @ camera.rotation.T + camera.translation
        tris = cam_pts[mesh.faces]  # (m, 3, 3)
        # cheap reject: all three vertices behind the near plane
        keep = (tris[:, :, 2] >= NEAR_PLANE).any(axis=1)
        for tri in tris[keep]:
            for part in _clip_near(tri, NEAR_PLANE):
                z = part[:, 2]
                xy = np.stack([camera.fx * part[:, 0] / z + camera.cx,
                               camera.fy * part[:, 1] / z + camera.cy], axis=1)
                _raster_triangle(depth, xy, z, w, h)
    silhouette = np.isfinite(depth)
    return depth, silhouette


def dilate_mask(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Morphological dilation with a square kernel (odd size, >= 1)."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"kernel must be odd and >= 1, got {kernel}")
    mask = np.asarray(mask, dtype=bool)
    if kernel == 1:
        return mask.copy()
    r = kernel // 2
    # separable max filter: rows then columns
    padded = np.zeros((mask.shape[0] + 2 * r, mask.shape[1]), dtype=bool)
    padded[r:r + mask.shape[0]] = mask
    rows = np.zeros_like(mask)
    for dy in range(kernel):
        rows |= padded[dy:dy + mask.shape[0]]
    padded = np.zeros((mask.shape[0], mask.shape[1] + 2 * r), dtype=bool)
    padded[:, r:r + mask.shape[1]] = rows
    out = np.zeros_like(mask)
    for dx in range(kernel):
        out |= padded[:, dx:dx + mask.shape[1]]
    return out
