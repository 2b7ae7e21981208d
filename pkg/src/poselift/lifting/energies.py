"""Energy terms of the view-consistent lifting objective.

Total objective: lambda_pf E_PF + lambda_vs E_VS + lambda_bp E_BP
+ lambda_bs E_BS + lambda_sc E_SC + lambda_sp E_SP, over body parameters and
per-view weight logits. All terms are torch float64; public wrappers accept
numpy parameter structs for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..body.model import BodyModel, BodyParams, decode_pose, forward_torch, joint_angle_prior
from ..hypotheses import PoseHypothesis
from ..scene.camera import MIN_DEPTH, Camera
from ..scene.sdf import SdfGrid, sample_sdf_torch
from .bvh import TriangleBvh

W_EPS = 1e-6            # guard on the view-weight normalizer
SC_TEMPERATURE = 0.01   # smooth-min temperature, meters
SIGMA_REF_WIDTH = 512   # sigma_gm is quoted at this image width


@dataclass
class EnergyWeights:
    lambda_pf: float = 1.0
    lambda_vs: float = 0.5
    lambda_bp: float = 0.02
    lambda_bs: float = 0.01
    lambda_sc: float = 10.0
    lambda_sp: float = 1.0
    sigma_gm: float = 100.0
    tau: float = 3.0

    def __post_init__(self):
        for name in ("lambda_pf", "lambda_vs", "lambda_bp", "lambda_bs",
                     "lambda_sc", "lambda_sp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.sigma_gm <= 0:
            raise ValueError("sigma_gm must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")


@dataclass
class OptimConfig:
    """Schedule for the fitting loop: AdamW with per-group step sizes and a
    cosine decay to lr_floor of the base rate."""

    steps: int = 1600
    lr_trans: float = 1e-2
    lr_rot: float = 1e-2
    lr_theta: float = 1e-2
    lr_logits: float = 1e-2
    lr_phi: float = 1e-3
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    lr_floor: float = 0.01
    init_view_weight: float = 0.9
    trace_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 < self.init_view_weight < 1.0:
            raise ValueError("init_view_weight must be in (0, 1)")
        for name in ("lr_trans", "lr_rot", "lr_theta", "lr_logits", "lr_phi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ViewWeights:
    """Per-view reliability weights, parameterized by unconstrained logits so
    w = sigmoid(logit) stays inside (0, 1)."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64).reshape(-1)

    @classmethod
    def initial(cls, k: int, w0: float = 0.9) -> "ViewWeights":
        logit = float(np.log(w0 / (1.0 - w0)))
        return cls(np.full(k, logit))

    @property
    def weights(self) -> np.ndarray:
        w = 1.0 / (1.0 + np.exp(-self.logits))
        return np.clip(w, 0.0, 1.0)


@dataclass
class LiftProblem:
    """Immutable bundle of everything the optimizer needs."""

    model: BodyModel
    sdf: SdfGrid
    cameras: list
    hypotheses: list
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    optim: OptimConfig = field(default_factory=OptimConfig)

    def __post_init__(self):
        if len(self.cameras) != len(self.hypotheses):
            raise ValueError("cameras and hypotheses must align")
        if len(self.cameras) == 0:
            raise ValueError("at least one view is required")
        by_view = {h.view_id: h for h in self.hypotheses}
        if len(by_view) != len(self.hypotheses):
            raise ValueError("duplicate hypothesis view_id")
        try:
            self.hypotheses = [by_view[c.view_id] for c in self.cameras]
        except KeyError as e:
            raise ValueError(f"no hypothesis for view {e.args[0]}") from None
        layouts = {h.layout_id for h in self.hypotheses}
        if len(layouts) != 1:
            raise ValueError("all hypotheses must share one layout")
        self._prepare()

    def _prepare(self):
        jm = self.hypotheses[0].joint_map
        det = jm.detector_indices
        self.body_idx = torch.from_numpy(jm.body_indices)
        self.targets = torch.from_numpy(
            np.stack([h.joints2d[det] for h in self.hypotheses]))          # (k, p, 2)
        self.conf = torch.from_numpy(
            np.stack([h.confidence[det] for h in self.hypotheses]))        # (k, p)
        self.rot = torch.from_numpy(np.stack([c.rotation for c in self.cameras]))
        self.tvec = torch.from_numpy(np.stack([c.translation for c in self.cameras]))
        self.focal = torch.from_numpy(
            np.array([[c.fx, c.fy] for c in self.cameras]))                # (k, 2)
        self.center = torch.from_numpy(
            np.array([[c.cx, c.cy] for c in self.cameras]))                # (k, 2)
        # kernel scale follows image width
        self.sigmas = torch.from_numpy(np.array(
            [self.weights.sigma_gm * c.width / SIGMA_REF_WIDTH for c in self.cameras]))
        self.body_bvh = TriangleBvh(self.model.faces, self.model.template_vertices)

    @property
    def n_views(self) -> int:
        return len(self.cameras)


# --- individual terms (torch core) ----------------------------------------------


def _pf_torch(problem: LiftProblem, joints: torch.Tensor, logits: torch.Tensor) -> torch.Tensor:
    pts = joints[problem.body_idx]                                      # (p, 3)
    cam = torch.einsum("kab,pb->kpa", problem.rot, pts) + problem.tvec[:, None, :]
    z = cam[..., 2]
    valid = (z > MIN_DEPTH).to(joints.dtype)
    zc = torch.clamp(z, min=MIN_DEPTH)
    px = problem.focal[:, None, :] * cam[..., :2] / zc[..., None] + problem.center[:, None, :]
    res2 = ((px - problem.targets) ** 2).sum(-1)                        # (k, p)
    rho = _rho_per_view(res2, problem.sigmas)
    w = torch.sigmoid(logits)
    num = (w[:, None] * problem.conf * valid * rho).sum()
    return num / (w.sum() + W_EPS)


def _rho_per_view(res2: torch.Tensor, sigmas: torch.Tensor) -> torch.Tensor:
    s2 = (sigmas ** 2)[:, None]
    return s2 * res2 / (s2 + res2)


def _vs_torch(logits: torch.Tensor, tau: float) -> torch.Tensor:
    w = torch.sigmoid(logits)
    return torch.clamp(torch.as_tensor(float(tau), dtype=logits.dtype) - w.sum(), min=0.0)


def _bp_torch(model: BodyModel, theta: torch.Tensor) -> torch.Tensor:
    theta_hat = decode_pose(model, theta)
    return (theta * theta).sum() + joint_angle_prior(model, theta_hat)


def _bs_torch(phi: torch.Tensor) -> torch.Tensor:
    return (phi * phi).sum()


def _sc_torch(sdf: SdfGrid, vertices: torch.Tensor) -> tuple:
    """Scene-contact term. Returns (energy, hard_min, n_penetrating).

    No penetration: the value is the exact hard minimum distance (contact
    attraction) while the gradient flows through a log-sum-exp smooth min.
    Any penetration: sum of penetration depths.
    """
    psi = sample_sdf_torch(sdf, vertices)
    hard_min = psi.min()
    hard_min_value = float(hard_min.detach())
    n_pen = int((psi < 0).sum())
    if hard_min_value > 0.0:
        smooth = -SC_TEMPERATURE * torch.logsumexp(-psi / SC_TEMPERATURE, dim=0)
        value = smooth + (hard_min - smooth).detach()
    else:
        value = torch.clamp(-psi, min=0.0).sum()
    return value, hard_min_value, n_pen


def _sp_torch(vertices: torch.Tensor, faces: np.ndarray, bvh: TriangleBvh) -> tuple:
    """Self-penetration: symmetric clamped plane distances over the colliding
    non-adjacent triangle pairs found by the BVH."""
    pairs = bvh.collide_self(vertices.detach().numpy())
    if len(pairs) == 0:
        return vertices.sum() * 0.0, 0
    tri_a = vertices[torch.from_numpy(faces[pairs[:, 0]])]              # (p, 3, 3)
    tri_b = vertices[torch.from_numpy(faces[pairs[:, 1]])]

    def one_sided(tri_x, tri_y):
        n = torch.linalg.cross(tri_y[:, 1] - tri_y[:, 0], tri_y[:, 2] - tri_y[:, 0])
        n = n / torch.clamp(torch.linalg.norm(n, dim=-1, keepdim=True), min=1e-12)
        d = ((tri_x - tri_y[:, 0:1, :]) * n[:, None, :]).sum(-1)        # (p, 3)
        return torch.clamp(-d, min=0.0).sum()

    return one_sided(tri_a, tri_b) + one_sided(tri_b, tri_a), len(pairs)


# --- public wrappers -------------------------------------------------------------


def _params_to_tensors(params: BodyParams) -> tuple:
    return (torch.from_numpy(params.rot6d), torch.from_numpy(params.trans),
            torch.from_numpy(params.theta), torch.from_numpy(params.phi))


def energy_pf(problem: LiftProblem, params: BodyParams, vw: ViewWeights) -> float:
    with torch.no_grad():
        r, t, th, ph = _params_to_tensors(params)
        _, joints = forward_torch(problem.model, r, t, th, ph)
        return float(_pf_torch(problem, joints, torch.from_numpy(vw.logits)))


def energy_vs(vw: ViewWeights, tau: float) -> float:
    return float(np.maximum(tau - vw.weights.sum(), 0.0))


def energy_bp(model: BodyModel, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    return float(theta @ theta) + joint_angle_prior(model, decode_pose(model, theta))


def energy_bs(phi) -> float:
    phi = np.asarray(phi, dtype=np.float64)
    return float(phi @ phi)


def energy_sc(vertices, sdf: SdfGrid) -> float:
    """Diagnostic value with the exact hard min in the no-contact branch."""
    with torch.no_grad():
        v = torch.from_numpy(np.asarray(vertices, dtype=np.float64))
        value, _, _ = _sc_torch(sdf, v)
        return float(value)


def energy_sp(vertices, faces) -> float:
    verts = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    bvh = TriangleBvh(faces, verts)
    with torch.no_grad():
        value, _ = _sp_torch(torch.from_numpy(verts), faces, bvh)
        return float(value)


def total_energy_torch(problem: LiftProblem, rot6d: torch.Tensor, trans: torch.Tensor,
                       theta: torch.Tensor, phi: torch.Tensor,
                       logits: torch.Tensor) -> tuple:
    """Weighted total plus a breakdown dict; tensors stay on the graph."""
    wts = problem.weights
    vertices, joints = forward_torch(problem.model, rot6d, trans, theta, phi)
    e_pf = _pf_torch(problem, joints, logits)
    e_vs = _vs_torch(logits, wts.tau)
    e_bp = _bp_torch(problem.model, theta)
    e_bs = _bs_torch(phi)
    e_sc, sc_hard_min, n_pen = _sc_torch(problem.sdf, vertices)
    e_sp, n_pairs = _sp_torch(vertices, problem.model.faces, problem.body_bvh)
    total = (wts.lambda_pf * e_pf + wts.lambda_vs * e_vs + wts.lambda_bp * e_bp
             + wts.lambda_bs * e_bs + wts.lambda_sc * e_sc + wts.lambda_sp * e_sp)
    breakdown = {
        "pf": e_pf, "vs": e_vs, "bp": e_bp, "bs": e_bs, "sc": e_sc, "sp": e_sp,
        "total": total,
        "sc_hard_min": sc_hard_min,
        "sc_penetrating": n_pen,
        "sp_pairs": n_pairs,
    }
    return total, breakdown


def total_energy(problem: LiftProblem, params: BodyParams, vw: ViewWeights) -> tuple:
    """Numpy-facing evaluation: (total, breakdown of floats)."""
    with torch.no_grad():
        r, t, th, ph = _params_to_tensors(params)
        total, breakdown = total_energy_torch(problem, r, t, th, ph,
                                              torch.from_numpy(vw.logits))
    out = {k: (float(v) if isinstance(v, torch.Tensor) else v)
           for k, v in breakdown.items()}
    return float(total), out
