"""Signed distance grids: construction from meshes, trilinear sampling, file I/O.

Sign convention: negative strictly inside closed surfaces, positive outside.
Signs come from angle-weighted pseudonormals evaluated at the closest surface
feature, which is robust for watertight meshes; open meshes trigger a warning.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .mesh import TriMesh

GSDF_MAGIC = b"GSDF"
GSDF_VERSION = 1


class SdfError(ValueError):
    pass


@dataclass(frozen=True)
class SdfGrid:
    """Regular signed-distance grid.

    `values` has shape (nx, ny, nz) float32; node (i, j, k) sits at
    origin + spacing * (i, j, k). The file layout is z-major (z slowest).
    Origin and spacing are kept at float32 precision so that save/load
    round-trips are bit exact.
    """

    origin: np.ndarray  # (3,) float32
    spacing: float
    values: np.ndarray  # (nx, ny, nz) float32

    def __post_init__(self):
        origin = np.ascontiguousarray(np.asarray(self.origin, dtype=np.float32)).reshape(3)
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float32))
        if values.ndim != 3 or min(values.shape) < 2:
            raise SdfError("values must be 3-D with dims >= 2 per axis")
        spacing = float(np.float32(self.spacing))
        if spacing <= 0:
            raise SdfError("spacing must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "values", values)
        origin.setflags(write=False)
        values.setflags(write=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def box_lo(self) -> np.ndarray:
        return self.origin.astype(np.float64)

    @property
    def box_hi(self) -> np.ndarray:
        return self.box_lo + self.spacing * (np.array(self.dims, dtype=np.float64) - 1.0)

    def node_positions(self) -> np.ndarray:
        """(nx, ny, nz, 3) array of node coordinates."""
        nx, ny, nz = self.dims
        ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                                 indexing="ij")
        idx = np.stack([ii, jj, kk], axis=-1).astype(np.float64)
        return self.box_lo + self.spacing * idx

    def torch_values(self) -> torch.Tensor:
        """Cached float64 tensor of the grid values (for autograd sampling)."""
        cached = self.__dict__.get("_torch_values")
        if cached is None:
            cached = torch.from_numpy(self.values.astype(np.float64))
            object.__setattr__(self, "_torch_values", cached)
        return cached


# --- construction ------------------------------------------------------------


def _mesh_is_closed(mesh: TriMesh) -> bool:
    edges = {}
    for f in mesh.faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    return all(c == 2 for c in edges.values())


def _closest_point_regions(p: np.ndarray, a, b, c):
    """Vectorized closest point on triangles (Ericson) with feature codes.

    p: (n, 1, 3) points; a, b, c: (1, m, 3) triangle corners. Returns
    (cp (n, m, 3), region (n, m) uint8) with region 0 = interior,
    1/2/3 = edges ab/bc/ca, 4/5/6 = vertices a/b/c.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.sum(ab * ap, axis=-1)
    d2 = np.sum(ac * ap, axis=-1)
    bp = p - b
    d3 = np.sum(ab * bp, axis=-1)
    d4 = np.sum(ac * bp, axis=-1)
    cp_ = p - c
    d5 = np.sum(ab * cp_, axis=-1)
    d6 = np.sum(ac * cp_, axis=-1)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    cond_a = (d1 <= 0) & (d2 <= 0)
    cond_b = (d3 >= 0) & (d4 <= d3)
    cond_c = (d6 >= 0) & (d5 <= d6)
    cond_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    cond_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    cond_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        t_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        den_bc = (d4 - d3) + (d5 - d6)
        t_bc = np.where(den_bc != 0, (d4 - d3) / den_bc, 0.0)
        den_in = va + vb + vc
        v_in = np.where(den_in != 0, vb / den_in, 0.0)
        w_in = np.where(den_in != 0, vc / den_in, 0.0)

    # resolve in priority order (first condition that holds wins)
    region = np.zeros(cond_a.shape, dtype=np.uint8)
    taken = np.zeros(cond_a.shape, dtype=bool)
    for code, cond in ((4, cond_a), (5, cond_b), (1, cond_ab), (6, cond_c),
                       (3, cond_ac), (2, cond_bc)):
        sel = cond & ~taken
        region[sel] = code
        taken |= sel

    cp = a + v_in[..., None] * ab + w_in[..., None] * ac  # interior
    cp = np.where((region == 4)[..., None], np.broadcast_to(a, cp.shape), cp)
    cp = np.where((region == 5)[..., None], np.broadcast_to(b, cp.shape), cp)
    cp = np.where((region == 6)[..., None], np.broadcast_to(c, cp.shape), cp)
    cp = np.where((region == 1)[..., None], a + t_ab[..., None] * ab, cp)
    cp = np.where((region == 3)[..., None], a + t_ac[..., None] * ac, cp)
    cp = np.where((region == 2)[..., None], b + t_bc[..., None] * (c - b), cp)
    return cp, region


class _PseudonormalTables:
    """Face/edge/vertex pseudonormals for sign evaluation."""

    def __init__(self, mesh: TriMesh):
        v = mesh.vertices
        f = mesh.faces
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        raw = np.cross(b - a, c - a)
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        self.face_normals = raw / np.maximum(norms, 1e-300)

        edge_accum: dict[tuple[int, int], np.ndarray] = {}
        for fi, face in enumerate(f):
            for i, j in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
                key = (min(i, j), max(i, j))
                edge_accum.setdefault(key, np.zeros(3))
                edge_accum[key] += self.face_normals[fi]

        vert_accum = np.zeros_like(v)
        for fi, face in enumerate(f):
            corners = v[face]
            for k in range(3):
                e1 = corners[(k + 1) % 3] - corners[k]
                e2 = corners[(k + 2) % 3] - corners[k]
                cosang = np.dot(e1, e2) / max(np.linalg.norm(e1) * np.linalg.norm(e2), 1e-300)
                ang = np.arccos(np.clip(cosang, -1.0, 1.0))
                vert_accum[face[k]] += ang * self.face_normals[fi]

        # per-face gathered tables so queries can index by (face, region)
        m = len(f)
        self.edge_normals = np.zeros((m, 3, 3))
        for fi, face in enumerate(f):
            for k, (i, j) in enumerate(((face[0], face[1]), (face[1], face[2]),
                                        (face[2], face[0]))):
                self.edge_normals[fi, k] = edge_accum[(min(i, j), max(i, j))]
        self.vertex_normals = vert_accum[f]  # (m, 3, 3), corner order a,b,c

    def normal_for(self, face_idx: np.ndarray, region: np.ndarray) -> np.ndarray:
        """Pseudonormal per query given winning face index and feature code."""
        out = self.face_normals[face_idx].copy()
        edge_sel = (region >= 1) & (region <= 3)
        vert_sel = region >= 4
        out[edge_sel] = self.edge_normals[face_idx[edge_sel], region[edge_sel] - 1]
        out[vert_sel] = self.vertex_normals[face_idx[vert_sel], region[vert_sel] - 4]
        return out


def signed_distance_to_mesh(points: np.ndarray, mesh: TriMesh,
                            tables: _PseudonormalTables | None = None,
                            chunk_elems: int = 4_000_000) -> np.ndarray:
    """Exact signed point-to-mesh distances for a batch of points."""
    if mesh.n_faces == 0:
        raise SdfError("mesh has no faces")
    if tables is None:
        tables = _PseudonormalTables(mesh)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    v = mesh.vertices
    f = mesh.faces
    a = v[f[:, 0]][None]
    b = v[f[:, 1]][None]
    c = v[f[:, 2]][None]
    out = np.empty(len(pts))
    chunk = max(1, chunk_elems // max(mesh.n_faces, 1))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        cp, region = _closest_point_regions(p, a, b, c)
        d2 = np.sum((p - cp) ** 2, axis=-1)
        win = np.argmin(d2, axis=1)
        rows = np.arange(len(win))
        cp_w = cp[rows, win]
        n = tables.normal_for(win, region[rows, win])
        dist = np.sqrt(d2[rows, win])
        sign = np.where(np.sum((pts[s:s + chunk] - cp_w) * n, axis=-1) < 0.0, -1.0, 1.0)
        out[s:s + chunk] = sign * dist
    return out


def build_sdf(mesh: TriMesh, dims: tuple[int, int, int], padding: float) -> SdfGrid:
    """Exact signed-distance grid over the mesh bounding box expanded by padding.

    Uniform spacing is chosen as the smallest value whose grid still covers the
    padded box on every axis; the grid is centered on the box.
    """
    if mesh.n_faces == 0 or mesh.n_vertices == 0:
        raise SdfError("cannot build an SDF from an empty mesh")
    dims = tuple(int(d) for d in dims)
    if min(dims) < 2:
        raise SdfError("dims must be >= 2 per axis")
    if padding < 0:
        raise SdfError("padding must be nonnegative")
    if not _mesh_is_closed(mesh):
        warnings.warn("mesh is not watertight; SDF sign may be unreliable",
                      RuntimeWarning, stacklevel=2)

    lo, hi = mesh.bounds()
    lo = lo - padding
    hi = hi + padding
    extent = hi - lo
    steps = np.array(dims, dtype=np.float64) - 1.0
    spacing = np.float32(max(float(np.max(extent / steps)), 1e-6))
    center = 0.5 * (lo + hi)
    origin = (center - 0.5 * float(spacing) * steps).astype(np.float32)

    grid = SdfGrid(origin=origin, spacing=float(spacing),
                   values=np.zeros(dims, dtype=np.float32))
    pts = grid.node_positions().reshape(-1, 3)
    vals = signed_distance_to_mesh(pts, mesh)
    return SdfGrid(origin=origin, spacing=float(spacing),
                   values=vals.reshape(dims).astype(np.float32))


# --- sampling -----------------------------------------------------------------


def _trilinear_setup(grid: SdfGrid, pts: np.ndarray):
    lo = grid.box_lo
    hi = grid.box_hi
    clamped = np.clip(pts, lo, hi)
    outside = np.linalg.norm(pts - clamped, axis=-1)
    local = (clamped - lo) / grid.spacing
    dims = np.array(grid.dims)
    cell = np.clip(np.floor(local).astype(np.int64), 0, dims - 2)
    frac = local - cell
    return cell, frac, outside


def sample_sdf(grid: SdfGrid, points: np.ndarray) -> np.ndarray | float:
    """Trilinear interpolation of the grid at world points.

    Points outside the grid return the value at the clamped boundary point
    plus the Euclidean distance to the grid box, keeping queries finite and
    gradients pointing back toward the grid.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    cell, frac, outside = _trilinear_setup(grid, pts)
    vals = grid.values.astype(np.float64)
    ix, iy, iz = cell[:, 0], cell[:, 1], cell[:, 2]
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    acc = np.zeros(len(pts))
    for dx in (0, 1):
        wx = fx if dx else 1.0 - fx
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            for dz in (0, 1):
                wz = fz if dz else 1.0 - fz
                acc += wx * wy * wz * vals[ix + dx, iy + dy, iz + dz]
    out = acc + outside
    return float(out[0]) if single else out


def sample_sdf_gradient(grid: SdfGrid, points: np.ndarray) -> np.ndarray:
    """Analytic gradient of the trilinear interpolant (interior points)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cell, frac, _ = _trilinear_setup(grid, pts)
    vals = grid.values.astype(np.float64)
    ix, iy, iz = cell[:, 0], cell[:, 1], cell[:, 2]
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    grad = np.zeros((len(pts), 3))
    for dx in (0, 1):
        wx, gx = (fx, 1.0) if dx else (1.0 - fx, -1.0)
        for dy in (0, 1):
            wy, gy = (fy, 1.0) if dy else (1.0 - fy, -1.0)
            for dz in (0, 1):
                wz, gz = (fz, 1.0) if dz else (1.0 - fz, -1.0)
                v = vals[ix + dx, iy + dy, iz + dz]
                grad[:, 0] += gx * wy * wz * v
                grad[:, 1] += wx * gy * wz * v
                grad[:, 2] += wx * wy * gz * v
    return grad / grid.spacing


def sample_sdf_torch(grid: SdfGrid, points: torch.Tensor) -> torch.Tensor:
    """Differentiable (autograd) version of sample_sdf for float64 tensors."""
    pts = points.reshape(-1, 3)
    lo = torch.from_numpy(grid.box_lo)
    hi = torch.from_numpy(grid.box_hi)
    clamped = torch.minimum(torch.maximum(pts, lo), hi)
    excess_sq = ((pts - clamped) ** 2).sum(dim=-1)
    # branchless sqrt would give NaN gradients at 0; select exact zeros instead
    outside = torch.where(excess_sq > 0, torch.sqrt(excess_sq.clamp_min(1e-300)),
                          torch.zeros_like(excess_sq))
    local = (clamped - lo) / grid.spacing
    dims = torch.tensor(grid.dims)
    cell = torch.clamp(local.detach().floor().long(), torch.zeros(3, dtype=torch.long),
                       dims - 2)
    frac = local - cell
    vals = grid.torch_values()
    ix, iy, iz = cell[:, 0], cell[:, 1], cell[:, 2]
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    acc = torch.zeros(len(pts), dtype=points.dtype)
    for dx in (0, 1):
        wx = fx if dx else 1.0 - fx
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            for dz in (0, 1):
                wz = fz if dz else 1.0 - fz
                acc = acc + wx * wy * wz * vals[ix + dx, iy + dy, iz + dz]
    return acc + outside


# --- file format --------------------------------------------------------------
#
# Little-endian binary: magic "GSDF", u32 version = 1, u32 dims[3] (nx, ny, nz),
# f32 origin[3], f32 spacing, then nx*ny*nz f32 values in z-major order
# (z slowest: flat index = iz*ny*nx + iy*nx + ix).


def save_sdf(grid: SdfGrid, path: str | Path) -> None:
    nx, ny, nz = grid.dims
    with open(path, "wb") as fh:
        fh.write(GSDF_MAGIC)
        fh.write(struct.pack("<I", GSDF_VERSION))
        fh.write(struct.pack("<3I", nx, ny, nz))
        fh.write(grid.origin.astype("<f4").tobytes())
        fh.write(struct.pack("<f", np.float32(grid.spacing)))
        fh.write(np.ascontiguousarray(grid.values.transpose(2, 1, 0)).astype("<f4").tobytes())


def load_sdf(path: str | Path) -> SdfGrid:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != GSDF_MAGIC:
        raise SdfError(f"{path}: bad magic, not a GSDF file")
    version, = struct.unpack_from("<I", data, 4)
    if version != GSDF_VERSION:
        raise SdfError(f"{path}: unsupported GSDF version {version}")
    nx, ny, nz = struct.unpack_from("<3I", data, 8)
    origin = np.frombuffer(data, dtype="<f4", count=3, offset=20).copy()
    spacing, = struct.unpack_from("<f", data, 32)
    count = nx * ny * nz
    body = data[36:]
    vals = np.frombuffer(body[:len(body) - len(body) % 4], dtype="<f4")
    if vals.size != count:
        raise SdfError(f"{path}: expected {count} values, file holds {vals.size}")
    values = vals.reshape(nz, ny, nx).transpose(2, 1, 0).copy()
    return SdfGrid(origin=origin, spacing=float(spacing), values=values)
