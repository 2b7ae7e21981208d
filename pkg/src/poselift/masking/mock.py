"""Scripted inpainting backend for tests and offline simulation.

Emits a parametric Gaussian-blob attention pattern for the "human" tokens
that drifts toward a target location as denoising progresses, with
pass-through latents. Everything is a pure function of (seed, t), so runs are
bitwise reproducible.
"""

from __future__ import annotations

import numpy as np

from .controller import ATTENTION_RES, AttentionMap, InpaintBackend

LATENT_SHAPE = (64, 64, 4)
IMAGE_SHAPE = (512, 512, 3)


class MockInpaintBackend(InpaintBackend):
    def __init__(self, seed: int = 0, n_tokens: int = 8, human_tokens=(1,),
                 moving: bool = True, blob_sigma: float = 2.5):
        self.seed = int(seed)
        self.n_tokens = int(n_tokens)
        self.human_tokens = tuple(int(i) for i in human_tokens)
        self.moving = bool(moving)
        self.blob_sigma = float(blob_sigma)
        rng = np.random.default_rng(self.seed)
        self._start = rng.uniform(4.0, 12.0, size=2)
        self._target = rng.uniform(5.0, 11.0, size=2)
        self.steps_seen: list[int] = []

    def init_latent(self):
        rng = np.random.default_rng(self.seed ^ 0xA5A5)
        return rng.standard_normal(LATENT_SHAPE)

    def _blob_center(self, t: int, total_hint: float = 50.0) -> np.ndarray:
        if not self.moving:
            return self._start
        # drift toward the target as t counts down
        frac = 1.0 - min(t, total_hint) / total_hint
        return self._start + frac * (self._target - self._start)

    def attention_at(self, t: int) -> AttentionMap:
        res = ATTENTION_RES
        cy, cx = self._blob_center(t)
        yy, xx = np.mgrid[0:res, 0:res]
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * self.blob_sigma ** 2))
        values = np.full((res, res, self.n_tokens), 0.05)
        for tok in self.human_tokens:
            values[:, :, tok] += blob
        values /= values.sum(axis=2, keepdims=True)
        return AttentionMap(values)

    def denoise_step(self, latent, mask, image, prompt: str, t: int):
        self.steps_seen.append(t)
        rng = np.random.default_rng(self.seed ^ (t * 0x9E3779B1))
        nxt = 0.98 * latent + 0.02 * rng.standard_normal(latent.shape)
        return nxt, self.attention_at(t)

    def decode(self, latent):
        # cheap deterministic "image": tile the first latent channel up 8x
        chan = latent[:, :, 0]
        lo, hi = chan.min(), chan.max()
        norm = (chan - lo) / (hi - lo) if hi > lo else np.zeros_like(chan)
        img = np.repeat(np.repeat(norm, 8, axis=0), 8, axis=1)
        return np.clip((np.stack([img] * 3, axis=2) * 255.0), 0, 255).astype(np.uint8)
