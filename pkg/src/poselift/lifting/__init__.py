from .bvh import TriangleBvh, bvh_collisions, collide_brute_force
from .energies import (
    SC_TEMPERATURE,
    W_EPS,
    EnergyWeights,
    LiftProblem,
    OptimConfig,
    ViewWeights,
    energy_bp,
    energy_bs,
    energy_pf,
    energy_sc,
    energy_sp,
    energy_vs,
    total_energy,
    total_energy_torch,
)
from .optimizer import LiftError, LiftResult, default_init, optimize
from .robust import geman_mcclure, geman_mcclure_sq

__all__ = [
    "SC_TEMPERATURE",
    "W_EPS",
    "EnergyWeights",
    "LiftError",
    "LiftProblem",
    "LiftResult",
    "OptimConfig",
    "TriangleBvh",
    "ViewWeights",
    "bvh_collisions",
    "collide_brute_force",
    "default_init",
    "energy_bp",
    "energy_bs",
    "energy_pf",
    "energy_sc",
    "energy_sp",
    "energy_vs",
    "geman_mcclure",
    "geman_mcclure_sq",
    "optimize",
    "total_energy",
    "total_energy_torch",
]
