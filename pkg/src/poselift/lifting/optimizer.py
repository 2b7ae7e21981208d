"""The fitting loop: AdamW over body parameters and view-weight logits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from ..body.model import BodyParams
from .energies import LiftProblem, ViewWeights, total_energy_torch

_TRACE_KEYS = ("pf", "vs", "bp", "bs", "sc", "sp", "total")


class LiftError(RuntimeError):
    pass


@dataclass
class LiftResult:
    params: BodyParams
    view_weights: ViewWeights
    energies: dict
    trace: list = field(default_factory=list)
    steps: int = 0


def default_init(p) -> BodyParams:
    """Standard starting state: body at the interaction point, identity
    orientation, neutral pose and shape."""
    return BodyParams(trans=np.asarray(p, dtype=np.float64))


def _check_finite(breakdown: dict, step: int) -> None:
    for name in _TRACE_KEYS:
        value = breakdown[name]
        if not bool(torch.isfinite(value)):
            raise LiftError(f"energy term {name!r} became non-finite at step {step}")


def _trace_entry(step: int, breakdown: dict) -> dict:
    entry = {"step": step}
    entry.update({k: float(breakdown[k].detach()) for k in _TRACE_KEYS})
    entry["sc_hard_min"] = breakdown["sc_hard_min"]
    entry["sp_pairs"] = breakdown["sp_pairs"]
    return entry


def optimize(problem: LiftProblem, init: BodyParams | None = None) -> LiftResult:
    """Minimize the total energy from the given initialization.

    Deterministic for a fixed problem and config; the returned trace holds one
    entry per trace_every steps plus the final state.
    """
    cfg = problem.optim
    torch.manual_seed(cfg.seed)
    if init is None:
        init = BodyParams()

    rot6d = torch.from_numpy(init.rot6d.copy()).requires_grad_(True)
    trans = torch.from_numpy(init.trans.copy()).requires_grad_(True)
    theta = torch.from_numpy(init.theta.copy()).requires_grad_(True)
    phi = torch.from_numpy(init.phi.copy()).requires_grad_(True)
    logit0 = math.log(cfg.init_view_weight / (1.0 - cfg.init_view_weight))
    logits = torch.full((problem.n_views,), logit0, dtype=torch.float64,
                        requires_grad=True)

    groups = [
        {"params": [trans], "lr": cfg.lr_trans, "base_lr": cfg.lr_trans},
        {"params": [rot6d], "lr": cfg.lr_rot, "base_lr": cfg.lr_rot},
        {"params": [theta], "lr": cfg.lr_theta, "base_lr": cfg.lr_theta},
        {"params": [logits], "lr": cfg.lr_logits, "base_lr": cfg.lr_logits},
        {"params": [phi], "lr": cfg.lr_phi, "base_lr": cfg.lr_phi},
    ]
    opt = torch.optim.AdamW(groups, betas=(cfg.beta1, cfg.beta2),
                            weight_decay=cfg.weight_decay)

    trace: list[dict] = []
    denom = max(cfg.steps - 1, 1)
    for step in range(cfg.steps):
        scale = cfg.lr_floor + (1.0 - cfg.lr_floor) * 0.5 * (1.0 + math.cos(math.pi * step / denom))
        for g in opt.param_groups:
            g["lr"] = g["base_lr"] * scale
        total, breakdown = total_energy_torch(problem, rot6d, trans, theta, phi, logits)
        _check_finite(breakdown, step)
        if step % cfg.trace_every == 0:
            trace.append(_trace_entry(step, breakdown))
        opt.zero_grad()
        total.backward()
        opt.step()

    with torch.no_grad():
        _, breakdown = total_energy_torch(problem, rot6d, trans, theta, phi, logits)
    _check_finite(breakdown, cfg.steps)
    trace.append(_trace_entry(cfg.steps, breakdown))
    energies = {k: float(breakdown[k]) for k in _TRACE_KEYS}
    energies["sc_hard_min"] = breakdown["sc_hard_min"]

    params = BodyParams(
        rot6d=rot6d.detach().numpy().copy(),
        trans=trans.detach().numpy().copy(),
        theta=theta.detach().numpy().copy(),
        phi=phi.detach().numpy().copy(),
    )
    vw = ViewWeights(logits.detach().numpy().copy())
    return LiftResult(params=params, view_weights=vw, energies=energies,
                      trace=trace, steps=cfg.steps)
