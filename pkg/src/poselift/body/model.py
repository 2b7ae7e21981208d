"""Simplified differentiable parametric body.

Parameter layout: 6D global orientation, 3D translation, a 32-dim latent pose
that decodes linearly to 21 axis-angle joint rotations, and 10 shape
coefficients. 22 joints total (pelvis root + 21 articulated).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch

N_JOINTS = 22          # pelvis root + 21 body joints
N_BODY_JOINTS = 21
N_THETA = 32
N_SHAPE = 10
N_POSE_OUT = N_BODY_JOINTS * 3


class BodyModelError(ValueError):
    pass


@dataclass
class BodyParams:
    """The optimized variables: global 6D rotation, translation, latent pose,
    and shape coefficients."""

    rot6d: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0, 1.0, 0]))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(N_THETA))
    phi: np.ndarray = field(default_factory=lambda: np.zeros(N_SHAPE))

    def __post_init__(self):
        self.rot6d = np.asarray(self.rot6d, dtype=np.float64).reshape(6)
        self.trans = np.asarray(self.trans, dtype=np.float64).reshape(3)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(N_THETA)
        self.phi = np.asarray(self.phi, dtype=np.float64).reshape(N_SHAPE)
        for name in ("rot6d", "trans", "theta", "phi"):
            if not np.isfinite(getattr(self, name)).all():
                raise BodyModelError(f"non-finite values in {name}")

    def copy(self) -> "BodyParams":
        return BodyParams(self.rot6d.copy(), self.trans.copy(),
                          self.theta.copy(), self.phi.copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rot6d, self.trans, self.theta, self.phi])


@dataclass(frozen=True)
class BodyModel:
    """Immutable body asset: template, skinning, regressor, pose decoder, priors."""

    template_vertices: np.ndarray   # (n, 3)
    faces: np.ndarray               # (m, 3) int
    joint_regressor: np.ndarray     # (22, n) row-stochastic
    parents: np.ndarray             # (22,) int, parents[0] == -1
    skinning_weights: np.ndarray    # (n, 22) row-stochastic
    shape_blends: np.ndarray        # (n, 3, 10)
    pose_decoder: np.ndarray        # (63, 32)
    lambda_joints: tuple            # body joint indices (1..21) in the |angle| group
    delta_signs: np.ndarray         # (21, 3) in {-1, 0, +1}; zero rows for lambda joints
    joint_names: tuple = ()

    def __post_init__(self):
        tv = np.asarray(self.template_vertices, dtype=np.float64)
        n = len(tv)
        object.__setattr__(self, "template_vertices", tv)
        object.__setattr__(self, "faces", np.asarray(self.faces, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "joint_regressor",
                           np.asarray(self.joint_regressor, dtype=np.float64).reshape(N_JOINTS, n))
        object.__setattr__(self, "parents", np.asarray(self.parents, dtype=np.int64).reshape(N_JOINTS))
        object.__setattr__(self, "skinning_weights",
                           np.asarray(self.skinning_weights, dtype=np.float64).reshape(n, N_JOINTS))
        object.__setattr__(self, "shape_blends",
                           np.asarray(self.shape_blends, dtype=np.float64).reshape(n, 3, N_SHAPE))
        object.__setattr__(self, "pose_decoder",
                           np.asarray(self.pose_decoder, dtype=np.float64).reshape(N_POSE_OUT, N_THETA))
        object.__setattr__(self, "lambda_joints", tuple(int(j) for j in self.lambda_joints))
        object.__setattr__(self, "delta_signs",
                           np.asarray(self.delta_signs, dtype=np.float64).reshape(N_BODY_JOINTS, 3))
        self._validate()

    def _validate(self):
        if np.abs(self.skinning_weights.sum(axis=1) - 1.0).max() > 1e-6:
            raise BodyModelError("skinning weight rows must sum to 1")
        if np.abs(self.joint_regressor.sum(axis=1) - 1.0).max() > 1e-6:
            raise BodyModelError("joint regressor rows must sum to 1")
        if self.parents[0] != -1:
            raise BodyModelError("joint 0 must be the root")
        for j in range(1, N_JOINTS):
            p = self.parents[j]
            if not 0 <= p < j:
                raise BodyModelError("parents must form a tree with parent index < child")
        lam = set(self.lambda_joints)
        if not lam or not lam.issubset(set(range(1, N_JOINTS))):
            raise BodyModelError("lambda joints must be body joints in 1..21")
        for j in range(1, N_JOINTS):
            row = self.delta_signs[j - 1]
            if j in lam:
                if np.any(row != 0):
                    raise BodyModelError(f"lambda joint {j} must have zero delta signs")
            elif not np.any(row != 0):
                raise BodyModelError(f"joint {j} is in neither the lambda nor the delta group")

    @property
    def n_vertices(self) -> int:
        return len(self.template_vertices)

    def tensors(self) -> dict:
        """Cached float64 torch copies of the model arrays."""
        cached = self.__dict__.get("_tensors")
        if cached is None:
            cached = {
                "template": torch.from_numpy(self.template_vertices),
                "regressor": torch.from_numpy(self.joint_regressor),
                "skinning": torch.from_numpy(self.skinning_weights),
                "blends": torch.from_numpy(self.shape_blends),
                "decoder": torch.from_numpy(self.pose_decoder),
                "delta_signs": torch.from_numpy(self.delta_signs),
            }
            object.__setattr__(self, "_tensors", cached)
        return cached


# --- rotations ----------------------------------------------------------------


def rot6d_to_matrix(r6) -> np.ndarray | torch.Tensor:
    """Gram-Schmidt a 6D rotation representation into a proper rotation matrix.

    Accepts a numpy array or a torch tensor (autograd-safe); near-degenerate
    inputs are perturbed with a warning rather than failing.
    """
    if isinstance(r6, torch.Tensor):
        return _rot6d_torch(r6)
    out = _rot6d_torch(torch.from_numpy(np.asarray(r6, dtype=np.float64)))
    return out.numpy()


def _rot6d_torch(r6: torch.Tensor) -> torch.Tensor:
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]
    n1 = torch.linalg.norm(a1, dim=-1)
    degenerate = bool((n1 < 1e-8).any())
    if not degenerate:
        b1 = a1 / n1[..., None]
        proj = (b1 * a2).sum(-1, keepdim=True)
        res = a2 - proj * b1
        degenerate = bool((torch.linalg.norm(res, dim=-1) < 1e-8).any())
    if degenerate:
        warnings.warn("degenerate 6D rotation input; applying perturbation fallback",
                      RuntimeWarning, stacklevel=2)
        bump = torch.zeros_like(r6)
        bump[..., 0] = 1e-6
        bump[..., 4] = 1e-6
        r6 = r6 + bump
        a1 = r6[..., 0:3]
        a2 = r6[..., 3:6]
        n1 = torch.linalg.norm(a1, dim=-1)
    b1 = a1 / n1[..., None]
    res = a2 - (b1 * a2).sum(-1, keepdim=True) * b1
    b2 = res / torch.linalg.norm(res, dim=-1)[..., None]
    b3 = torch.linalg.cross(b1, b2, dim=-1)
    return torch.stack([b1, b2, b3], dim=-1)  # columns b1, b2, b3


def axis_angle_to_matrix(aa: torch.Tensor) -> torch.Tensor:
    """Batched Rodrigues formula, exact identity at zero rotation."""
    angle = torch.sqrt((aa * aa).sum(-1) + 1e-24)
    axis = aa / angle[..., None]
    x, y, z = axis[..., 0], axis[..., 1], axis[..., 2]
    zero = torch.zeros_like(x)
    k = torch.stack([
        torch.stack([zero, -z, y], dim=-1),
        torch.stack([z, zero, -x], dim=-1),
        torch.stack([-y, x, zero], dim=-1),
    ], dim=-2)
    eye = torch.eye(3, dtype=aa.dtype).expand(k.shape)
    s = torch.sin(angle)[..., None, None]
    c = torch.cos(angle)[..., None, None]
    return eye + s * k + (1.0 - c) * (k @ k)


# --- body function --------------------------------------------------------------


def decode_pose(model: BodyModel, theta) -> np.ndarray | torch.Tensor:
    """Linear decode of the 32-dim latent pose into 21 axis-angle rotations."""
    if isinstance(theta, torch.Tensor):
        return (model.tensors()["decoder"] @ theta).reshape(N_BODY_JOINTS, 3)
    return (model.pose_decoder @ np.asarray(theta, dtype=np.float64)).reshape(N_BODY_JOINTS, 3)


def forward_torch(model: BodyModel, rot6d: torch.Tensor, trans: torch.Tensor,
                  theta: torch.Tensor, phi: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable body function: shape blends, kinematic chain, linear blend
    skinning, then the global rigid transform. Returns (vertices (n,3), joints (22,3))."""
    t = model.tensors()
    shaped = t["template"] + torch.einsum("vcb,b->vc", t["blends"], phi)
    rest_joints = t["regressor"] @ shaped  # (22, 3)

    theta_hat = decode_pose(model, theta)
    rots = axis_angle_to_matrix(theta_hat)  # (21, 3, 3)

    world_rot = [torch.eye(3, dtype=shaped.dtype)]
    world_pos = [rest_joints[0]]
    for j in range(1, N_JOINTS):
        p = int(model.parents[j])
        world_rot.append(world_rot[p] @ rots[j - 1])
        world_pos.append(world_rot[p] @ (rest_joints[j] - rest_joints[p]) + world_pos[p])
    rot_stack = torch.stack(world_rot)  # (22, 3, 3)
    pos_stack = torch.stack(world_pos)  # (22, 3)

    # LBS: v' = sum_j w_vj (R_j (v - J_j) + p_j)
    offsets = pos_stack - torch.einsum("jab,jb->ja", rot_stack, rest_joints)
    rotated = torch.einsum("jab,vb->vja", rot_stack, shaped)
    skinned = torch.einsum("vj,vja->va", t["skinning"], rotated) + t["skinning"] @ offsets

    global_rot = rot6d_to_matrix(rot6d)
    vertices = skinned @ global_rot.T + trans
    joints = t["regressor"] @ vertices
    return vertices, joints


def forward(model: BodyModel, params: BodyParams) -> tuple[np.ndarray, np.ndarray]:
    """Posed vertices and joints for numpy parameters."""
    with torch.no_grad():
        verts, joints = forward_torch(
            model,
            torch.from_numpy(params.rot6d),
            torch.from_numpy(params.trans),
            torch.from_numpy(params.theta),
            torch.from_numpy(params.phi),
        )
    return verts.numpy(), joints.numpy()


def joint_angle_prior(model: BodyModel, theta_hat) -> float | torch.Tensor:
    """Angle prior: absolute angles on the lambda joints (head, feet, wrists)
    plus one-sided hinges with per-axis signs on the remaining joints."""
    lam_rows = [j - 1 for j in model.lambda_joints]
    if isinstance(theta_hat, torch.Tensor):
        signs = model.tensors()["delta_signs"]
        e = theta_hat[lam_rows].abs().sum()
        e = e + torch.clamp(signs * theta_hat, min=0.0).sum()
        return e
    th = np.asarray(theta_hat, dtype=np.float64).reshape(N_BODY_JOINTS, 3)
    e = float(np.abs(th[lam_rows]).sum())
    e += float(np.maximum(model.delta_signs * th, 0.0).sum())
    return e
