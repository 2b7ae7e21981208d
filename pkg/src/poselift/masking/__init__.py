from .controller import (
    ATTENTION_RES,
    DEFAULT_LATENT_HW,
    AttentionMap,
    InpaintBackend,
    InpaintResult,
    MaskConfig,
    MaskState,
    MaskingError,
    mask_from_attention,
    run_inpaint_loop,
    silhouette_mask,
)
from .io import load_mask_png, save_mask_png
from .mock import MockInpaintBackend
from .protocol import (
    PROTOCOL_VERSION,
    ProtocolClient,
    decode_array,
    encode_array,
    serve_backend,
)

__all__ = [
    "ATTENTION_RES",
    "DEFAULT_LATENT_HW",
    "PROTOCOL_VERSION",
    "AttentionMap",
    "InpaintBackend",
    "InpaintResult",
    "MaskConfig",
    "MaskState",
    "MaskingError",
    "MockInpaintBackend",
    "ProtocolClient",
    "decode_array",
    "encode_array",
    "load_mask_png",
    "mask_from_attention",
    "run_inpaint_loop",
    "save_mask_png",
    "serve_backend",
    "silhouette_mask",
]
