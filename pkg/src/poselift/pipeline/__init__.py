"""End-to-end orchestration: config, hypothesis providers, runners, CLI."""

from .config import (
    AdapterConfig,
    ConfigError,
    FilesConfig,
    PipelineConfig,
    SyntheticConfig,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
    save_config,
    shipped_default_dict,
)
from .provider import (
    AdapterProvider,
    FilesProvider,
    PipelineError,
    SyntheticProvider,
    make_ground_truth,
    make_provider,
)
from .run import PipelineResult, load_body_model, load_scene, refine, run_initial, run_pipeline

__all__ = [
    "AdapterConfig",
    "AdapterProvider",
    "ConfigError",
    "FilesConfig",
    "FilesProvider",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "SyntheticConfig",
    "SyntheticProvider",
    "config_from_dict",
    "config_to_dict",
    "default_config",
    "load_body_model",
    "load_config",
    "load_scene",
    "make_ground_truth",
    "make_provider",
    "refine",
    "run_initial",
    "run_pipeline",
    "save_config",
    "shipped_default_dict",
]
