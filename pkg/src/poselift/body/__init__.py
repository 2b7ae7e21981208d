from .model import (
    N_BODY_JOINTS,
    N_JOINTS,
    N_SHAPE,
    N_THETA,
    BodyModel,
    BodyModelError,
    BodyParams,
    axis_angle_to_matrix,
    decode_pose,
    forward,
    forward_torch,
    joint_angle_prior,
    rot6d_to_matrix,
)
from .capsule import JOINT_NAMES, LAMBDA_JOINTS, PARENTS, REST_JOINTS, capsule_person
from .io import load_body, load_params, save_body, save_params

__all__ = [
    "N_BODY_JOINTS",
    "N_JOINTS",
    "N_SHAPE",
    "N_THETA",
    "BodyModel",
    "BodyModelError",
    "BodyParams",
    "JOINT_NAMES",
    "LAMBDA_JOINTS",
    "PARENTS",
    "REST_JOINTS",
    "axis_angle_to_matrix",
    "capsule_person",
    "decode_pose",
    "forward",
    "forward_torch",
    "joint_angle_prior",
    "load_body",
    "load_params",
    "rot6d_to_matrix",
    "save_body",
    "save_params",
]
