"""Mask persistence as 1-bit PNG."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def save_mask_png(mask: np.ndarray, path) -> None:
    mask = np.asarray(mask).astype(bool)
    img = Image.fromarray((mask * 255).astype(np.uint8), mode="L")
    img.convert("1", dither=Image.Dither.NONE).save(Path(path), format="PNG")


def load_mask_png(path) -> np.ndarray:
    with Image.open(Path(path)) as img:
        return np.array(img.convert("1"), dtype=bool)
