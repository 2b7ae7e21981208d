"""Body asset container and parameter file serialization.

The asset is a single little-endian binary blob (magic ``PBDY``) holding the
template geometry, regressor, skinning, blend shapes, pose decoder, and a
small text manifest for joint names and prior groups. Parameters are stored
as a line-oriented text format that round-trips floats exactly via repr().
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import (
    N_BODY_JOINTS,
    N_JOINTS,
    N_POSE_OUT,
    N_SHAPE,
    N_THETA,
    BodyModel,
    BodyModelError,
    BodyParams,
)

PBDY_MAGIC = b"PBDY"
PBDY_VERSION = 1

PARAMS_HEADER = "# poselift params v1"


def save_body(model: BodyModel, path) -> None:
    path = Path(path)
    n = model.n_vertices
    m = len(model.faces)
    manifest = _build_manifest(model).encode("utf-8")
    with open(path, "wb") as f:
        f.write(PBDY_MAGIC)
        f.write(struct.pack("<IIIIII", PBDY_VERSION, n, m, N_JOINTS, N_THETA, N_SHAPE))
        f.write(model.template_vertices.astype("<f4").tobytes())
        f.write(model.faces.astype("<u4").tobytes())
        f.write(model.joint_regressor.astype("<f4").tobytes())
        f.write(model.parents.astype("<i4").tobytes())
        f.write(model.skinning_weights.astype("<f4").tobytes())
        f.write(model.shape_blends.astype("<f4").tobytes())
        f.write(model.pose_decoder.astype("<f4").tobytes())
        f.write(struct.pack("<I", len(manifest)))
        f.write(manifest)


def load_body(path) -> BodyModel:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != PBDY_MAGIC:
        raise BodyModelError(f"{path}: not a body asset (bad magic)")
    version, n, m, nj, nt, ns = struct.unpack_from("<IIIIII", blob, 4)
    if version != PBDY_VERSION:
        raise BodyModelError(f"{path}: unsupported body asset version {version}")
    if (nj, nt, ns) != (N_JOINTS, N_THETA, N_SHAPE):
        raise BodyModelError(f"{path}: unexpected model dimensions {(nj, nt, ns)}")
    off = 28

    def take(dtype, count, shape):
        nonlocal off
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off).reshape(shape)
        off += arr.nbytes
        return arr

    template = take("<f4", n * 3, (n, 3)).astype(np.float64)
    faces = take("<u4", m * 3, (m, 3)).astype(np.int64)
    regressor = take("<f4", N_JOINTS * n, (N_JOINTS, n)).astype(np.float64)
    parents = take("<i4", N_JOINTS, (N_JOINTS,)).astype(np.int64)
    skinning = take("<f4", n * N_JOINTS, (n, N_JOINTS)).astype(np.float64)
    blends = take("<f4", n * 3 * N_SHAPE, (n, 3, N_SHAPE)).astype(np.float64)
    decoder = take("<f4", N_POSE_OUT * N_THETA, (N_POSE_OUT, N_THETA)).astype(np.float64)
    (mlen,) = struct.unpack_from("<I", blob, off)
    off += 4
    manifest = blob[off:off + mlen].decode("utf-8")
    names, lam, signs = _parse_manifest(manifest)
    return BodyModel(
        template_vertices=template,
        faces=faces,
        joint_regressor=regressor,
        parents=parents,
        skinning_weights=skinning,
        shape_blends=blends,
        pose_decoder=decoder,
        lambda_joints=lam,
        delta_signs=signs,
        joint_names=names,
    )


_AXES = ("x", "y", "z")


def _build_manifest(model: BodyModel) -> str:
    names = model.joint_names or tuple(f"joint_{j}" for j in range(N_JOINTS))
    lines = ["joints " + " ".join(names)]
    lines.append("lambda " + " ".join(names[j] for j in model.lambda_joints))
    for j in range(1, N_JOINTS):
        for a in range(3):
            s = model.delta_signs[j - 1, a]
            if s != 0.0:
                lines.append(f"delta {names[j]} {_AXES[a]} {int(s):+d}")
    return "\n".join(lines) + "\n"


def _parse_manifest(text: str):
    names: tuple = ()
    lam: list[int] = []
    signs = np.zeros((N_BODY_JOINTS, 3))
    for raw in text.splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "joints":
            names = tuple(parts[1:])
        elif parts[0] == "lambda":
            lam = [names.index(w) for w in parts[1:]]
        elif parts[0] == "delta":
            j = names.index(parts[1])
            signs[j - 1, _AXES.index(parts[2])] = float(parts[3])
        else:
            raise BodyModelError(f"unknown manifest record {parts[0]!r}")
    if len(names) != N_JOINTS:
        raise BodyModelError("manifest must name all joints")
    return names, tuple(lam), signs


# --- parameter files ------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values).ravel())


def save_params(params: BodyParams, path, *, view_weights=None, energies=None) -> None:
    """Write fitted parameters; optional converged view weights and an energy
    breakdown travel with them for diagnostics."""
    lines = [PARAMS_HEADER,
             "rot6d " + _fmt(params.rot6d),
             "trans " + _fmt(params.trans),
             "theta " + _fmt(params.theta),
             "phi " + _fmt(params.phi)]
    if view_weights is not None:
        lines.append("view_weights " + _fmt(view_weights))
    if energies:
        for name, value in energies.items():
            lines.append(f"energy {name} {repr(float(value))}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> tuple[BodyParams, dict]:
    """Read a parameter file; returns (params, extras) where extras may hold
    'view_weights' and 'energies'."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != PARAMS_HEADER:
        raise BodyModelError(f"{path}: missing parameter file header")
    fields: dict = {}
    extras: dict = {}
    for raw in lines[1:]:
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        key = parts[0]
        if key == "energy":
            extras.setdefault("energies", {})[parts[1]] = float(parts[2])
        elif key == "view_weights":
            extras["view_weights"] = np.array([float(v) for v in parts[1:]])
        elif key in ("rot6d", "trans", "theta", "phi"):
            fields[key] = np.array([float(v) for v in parts[1:]])
        else:
            raise BodyModelError(f"{path}: unknown parameter record {key!r}")
    missing = {"rot6d", "trans", "theta", "phi"} - set(fields)
    if missing:
        raise BodyModelError(f"{path}: missing records {sorted(missing)}")
    try:
        params = BodyParams(**fields)
    except ValueError as e:
        raise BodyModelError(f"{path}: {e}") from e
    return params, extras
