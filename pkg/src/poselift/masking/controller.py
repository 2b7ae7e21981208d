"""Dynamic-masking inpainting controller.

Drives an abstract denoising-inpainting backend: the inpainting mask starts
empty and is re-derived every step from the backend's cross-attention over
the human-referring tokens, then frozen for the final steps to stabilize the
result. The controller owns no ML code; backends are injected (a scripted
mock for tests, a real diffusion model behind the wire protocol).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..scene.mesh import TriMesh
from ..scene.camera import Camera
from ..scene.raster import dilate_mask, rasterize

ATTENTION_RES = 16
DEFAULT_LATENT_HW = (64, 64)


class MaskingError(RuntimeError):
    pass


@dataclass(frozen=True)
class AttentionMap:
    """Cross-attention heat maps, one per prompt token, normalized per pixel."""

    values: np.ndarray  # (h, w, n_tokens)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise MaskingError("attention map must be (h, w, n_tokens)")
        if v.min() < 0.0:
            raise MaskingError("attention values must be nonnegative")
        sums = v.sum(axis=2)
        if np.abs(sums - 1.0).max() > 1e-4:
            raise MaskingError("attention must sum to 1 across tokens per pixel")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_layers(cls, layers) -> "AttentionMap":
        """Average the maps a backend reports for several layers."""
        layers = list(layers)
        if not layers:
            raise MaskingError("no attention layers given")
        stack = np.stack([np.asarray(l, dtype=np.float64) for l in layers])
        return cls(stack.mean(axis=0))

    @property
    def n_tokens(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class MaskConfig:
    steps: int = 50          # T: total denoising steps
    t_min: int = 25          # mask frozen from this timestep down
    token_indices: tuple = (1,)
    threshold: float = 0.5
    latent_hw: tuple = DEFAULT_LATENT_HW

    def __post_init__(self):
        if not self.steps > self.t_min >= 1:
            raise MaskingError("need steps > t_min >= 1")
        if not self.token_indices:
            raise MaskingError("token_indices must be nonempty")


@dataclass
class MaskState:
    mask: np.ndarray  # binary, latent resolution
    t: int
    config: MaskConfig


@dataclass
class InpaintResult:
    image: np.ndarray
    mask: np.ndarray                      # final mask M_0
    trajectory: list = field(default_factory=list)  # MaskState for t = T .. 0


class InpaintBackend:
    """Interface the controller drives; deterministic given its own seed."""

    def init_latent(self):
        raise NotImplementedError

    def denoise_step(self, latent, mask, image, prompt: str, t: int):
        """One denoising step; returns (next_latent, AttentionMap)."""
        raise NotImplementedError

    def decode(self, latent):
        raise NotImplementedError


def _bilinear_resize(img: np.ndarray, out_hw: tuple) -> np.ndarray:
    """Corner-aligned bilinear resampling of a 2D array."""
    h_in, w_in = img.shape
    h_out, w_out = out_hw
    ys = (np.arange(h_out) * (h_in - 1) / (h_out - 1)) if h_out > 1 else np.zeros(1)
    xs = (np.arange(w_out) * (w_in - 1) / (w_out - 1)) if w_out > 1 else np.zeros(1)
    y0 = np.clip(ys.astype(np.int64), 0, h_in - 1)
    x0 = np.clip(xs.astype(np.int64), 0, w_in - 1)
    y1 = np.minimum(y0 + 1, h_in - 1)
    x1 = np.minimum(x0 + 1, w_in - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = img[np.ix_(y0, x0)]
    b = img[np.ix_(y0, x1)]
    c = img[np.ix_(y1, x0)]
    d = img[np.ix_(y1, x1)]
    return (a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx
            + c * fy * (1 - fx) + d * fy * fx)


def mask_from_attention(att: AttentionMap, token_indices, threshold: float = 0.5,
                        latent_hw: tuple = DEFAULT_LATENT_HW) -> np.ndarray:
    """Sum the selected token heat maps, min-max normalize, upsample to the
    latent resolution, binarize. A flat map yields an empty mask."""
    tokens = tuple(int(i) for i in token_indices)
    if not tokens:
        raise MaskingError("token_indices must be nonempty")
    if any(not 0 <= i < att.n_tokens for i in tokens):
        raise MaskingError("token index out of range")
    heat = att.values[:, :, list(tokens)].sum(axis=2)
    lo, hi = float(heat.min()), float(heat.max())
    if hi - lo < 1e-12:
        return np.zeros(latent_hw, dtype=bool)
    norm = (heat - lo) / (hi - lo)
    return _bilinear_resize(norm, latent_hw) >= threshold


def run_inpaint_loop(backend: InpaintBackend, image, prompt: str,
                     cfg: MaskConfig) -> InpaintResult:
    """The dynamic masking loop: M_T empty; while t > t_min the mask is
    re-derived from the step's cross-attention, so the last update writes
    M_{t_min} and every later mask equals it exactly."""
    latent = backend.init_latent()
    mask = np.zeros(cfg.latent_hw, dtype=bool)
    trajectory = [MaskState(mask.copy(), cfg.steps, cfg)]
    for t in range(cfg.steps, 0, -1):
        try:
            latent, att = backend.denoise_step(latent, mask, image, prompt, t)
        except Exception as e:
            raise MaskingError(f"backend failed at step t={t}: {e}") from e
        if t > cfg.t_min:
            mask = mask_from_attention(att, cfg.token_indices, cfg.threshold,
                                       cfg.latent_hw)
        trajectory.append(MaskState(mask.copy(), t - 1, cfg))
    return InpaintResult(image=backend.decode(latent), mask=mask.copy(),
                         trajectory=trajectory)


def silhouette_mask(body: TriMesh, camera: Camera, dilation_kernel: int = 11) -> np.ndarray:
    """Rendered body silhouette dilated by a square kernel; the refinement
    stage uses this in place of dynamic masking."""
    _, sil = rasterize(body, camera)
    return dilate_mask(sil, dilation_kernel)
