"""Robust error kernels."""

from __future__ import annotations

import numpy as np
import torch


def geman_mcclure(e, sigma: float):
    """Geman-McClure kernel rho(e) = sigma^2 e^2 / (sigma^2 + e^2).

    Smooth, monotone in |e|, saturates at sigma^2. Accepts numpy or torch
    inputs of any shape.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s2 = float(sigma) ** 2
    if isinstance(e, torch.Tensor):
        e2 = e * e
        return s2 * e2 / (s2 + e2)
    e2 = np.square(np.asarray(e, dtype=np.float64))
    out = s2 * e2 / (s2 + e2)
    return float(out) if out.ndim == 0 else out


def geman_mcclure_sq(e2, sigma: float):
    """Kernel applied to an already-squared residual, avoiding the sqrt.

    Equivalent to geman_mcclure(sqrt(e2), sigma) but smooth at 0 under
    autograd.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s2 = float(sigma) ** 2
    return s2 * e2 / (s2 + e2)
