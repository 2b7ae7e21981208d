"""Triangle mesh container with OBJ / binary-PLY loading."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEGENERATE_AREA = 1e-12  # m^2, faces below this are dropped at load time


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh: vertices in meters, faces as vertex-index triples."""

    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int64

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.size and (f.ndim != 2 or f.shape[1] != 3):
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        f = f.reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        v.setflags(write=False)
        f.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def face_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def drop_degenerate(self) -> "TriMesh":
        """Remove zero-area faces (the load-time cleanup contract)."""
        if self.n_faces == 0:
            return self
        keep = self.face_areas() > DEGENERATE_AREA
        if keep.all():
            return self
        return TriMesh(self.vertices, self.faces[keep])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n_vertices == 0:
            raise MeshError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, rotation: np.ndarray | None = None,
                    translation: np.ndarray | None = None) -> "TriMesh":
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        return TriMesh(v, self.faces)


def _load_obj(path: Path) -> TriMesh:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v" and len(parts) >= 4:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "f" and len(parts) >= 4:
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                # fan-triangulate polygons
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not verts:
        raise MeshError(f"no vertices in OBJ file {path}")
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3))


_PLY_DTYPES = {
    "float": ("<f4", 4), "float32": ("<f4", 4),
    "double": ("<f8", 8), "float64": ("<f8", 8),
    "int": ("<i4", 4), "int32": ("<i4", 4),
    "uint": ("<u4", 4), "uint32": ("<u4", 4),
    "uchar": ("<u1", 1), "uint8": ("<u1", 1),
    "char": ("<i1", 1), "int8": ("<i1", 1),
    "short": ("<i2", 2), "int16": ("<i2", 2),
    "ushort": ("<u2", 2), "uint16": ("<u2", 2),
}


def _load_ply(path: Path) -> TriMesh:
    """Binary little-endian PLY, positions and faces only."""
    with open(path, "rb") as fh:
        data = fh.read()
    header_end = data.find(b"end_header\n")
    if header_end < 0:
        raise MeshError(f"{path}: missing PLY end_header")
    header = data[:header_end].decode("ascii", errors="replace").splitlines()
    body = data[header_end + len(b"end_header\n"):]

    if not header or header[0].strip() != "ply":
        raise MeshError(f"{path}: not a PLY file")
    fmt = next((h.split()[1] for h in header if h.startswith("format")), "")
    if fmt != "binary_little_endian":
        raise MeshError(f"{path}: only binary_little_endian PLY supported, got {fmt!r}")

    # parse element/property declarations
    elements: list[tuple[str, int, list[tuple]]] = []
    for line in header[1:]:
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))

    verts = None
    faces: list[list[int]] = []
    offset = 0
    for name, count, props in elements:
        if name == "vertex":
            if any(p[0] == "list" for p in props):
                raise MeshError("list properties on vertex element unsupported")
            names = [p[2] for p in props]
            dtypes = [(p[2], _PLY_DTYPES[p[1]][0]) for p in props]
            rec = np.dtype(dtypes)
            arr = np.frombuffer(body, dtype=rec, count=count, offset=offset)
            offset += rec.itemsize * count
            for ax in ("x", "y", "z"):
                if ax not in names:
                    raise MeshError(f"vertex element missing property {ax}")
            verts = np.stack([arr["x"], arr["y"], arr["z"]], axis=1).astype(np.float64)
        elif name == "face":
            (kind, cnt_t, idx_t, _pname), = props  # single list property expected
            if kind != "list":
                raise MeshError("face element must hold a list property")
            cnt_dt, cnt_sz = _PLY_DTYPES[cnt_t]
            idx_dt, idx_sz = _PLY_DTYPES[idx_t]
            for _ in range(count):
                n = int(np.frombuffer(body, dtype=cnt_dt, count=1, offset=offset)[0])
                offset += cnt_sz
                idx = np.frombuffer(body, dtype=idx_dt, count=n, offset=offset)
                offset += idx_sz * n
                for k in range(1, n - 1):
                    faces.append([int(idx[0]), int(idx[k]), int(idx[k + 1])])
        else:
            raise MeshError(f"unsupported PLY element {name!r}")
    if verts is None:
        raise MeshError(f"{path}: PLY file has no vertex element")
    return TriMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))


def load_mesh(path: str | Path) -> TriMesh:
    """Load an OBJ or binary PLY mesh; degenerate faces are dropped."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        mesh = _load_obj(path)
    elif suffix == ".ply":
        mesh = _load_ply(path)
    else:
        raise MeshError(f"unsupported mesh format {suffix!r} (use .obj or .ply)")
    return mesh.drop_degenerate()


def save_obj(mesh: TriMesh, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def save_ply(mesh: TriMesh, path: str | Path) -> None:
    """Binary little-endian PLY with float32 positions."""
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {mesh.n_vertices}\n"
        "property float x\nproperty float y\nproperty float z\n"
        f"element face {mesh.n_faces}\n"
        "property list uchar uint vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(mesh.vertices.astype("<f4").tobytes())
        for f in mesh.faces:
            fh.write(struct.pack("<B3I", 3, int(f[0]), int(f[1]), int(f[2])))
