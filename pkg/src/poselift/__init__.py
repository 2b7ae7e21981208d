"""poselift: scene-aware synthesis of 3D human-scene interactions by lifting
multi-view 2D pose hypotheses into one view-consistent parametric body."""

__version__ = "0.1.0"

from . import body, hypotheses, lifting, masking, metrics, pipeline, scene

__all__ = [
    "__version__",
    "body",
    "hypotheses",
    "lifting",
    "masking",
    "metrics",
    "pipeline",
    "scene",
]
