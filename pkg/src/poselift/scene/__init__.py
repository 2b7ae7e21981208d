"""Scene handling: meshes, signed distance grids, cameras, and rasterization."""

from .camera import Camera, CameraError, load_cameras, look_at, project, save_cameras, unproject
from .mesh import MeshError, TriMesh, load_mesh, save_obj, save_ply
from .raster import dilate_mask, rasterize
from .sampling import CameraSamplingConfig, sample_cameras, sample_patch_points, visible_patch_ratio
from .sdf import (
    SdfError,
    SdfGrid,
    build_sdf,
    load_sdf,
    sample_sdf,
    sample_sdf_gradient,
    sample_sdf_torch,
    save_sdf,
    signed_distance_to_mesh,
)

__all__ = [
    "Camera",
    "CameraError",
    "CameraSamplingConfig",
    "MeshError",
    "SdfError",
    "SdfGrid",
    "TriMesh",
    "build_sdf",
    "dilate_mask",
    "load_cameras",
    "load_mesh",
    "load_sdf",
    "look_at",
    "project",
    "rasterize",
    "sample_cameras",
    "sample_patch_points",
    "sample_sdf",
    "sample_sdf_gradient",
    "sample_sdf_torch",
    "save_cameras",
    "save_obj",
    "save_ply",
    "save_sdf",
    "signed_distance_to_mesh",
    "unproject",
    "visible_patch_ratio",
]
