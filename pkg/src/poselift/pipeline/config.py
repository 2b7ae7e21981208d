"""Pipeline configuration: dataclass defaults, YAML overlay, validation.

The dataclass defaults are the source of truth; the shipped default_config
YAML mirrors them (a test keeps the two in sync). User config files overlay
the defaults key by key; unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..lifting.energies import EnergyWeights, OptimConfig
from ..masking.controller import MaskConfig
from ..scene.sampling import CameraSamplingConfig

PROVIDERS = ("synthetic", "files", "adapter-protocol")


class ConfigError(ValueError):
    pass


@dataclass
class SyntheticConfig:
    """Synthetic hypothesis provider: projects a seeded ground-truth body."""

    noise_px: float = 2.0
    outlier_views: tuple = ()
    layout: str = "body22"
    gt_seed: int = 0
    theta_scale: float = 0.5
    contact_depth: float = 0.005
    refine_noise_decay: float = 0.5

    def __post_init__(self):
        self.outlier_views = tuple(int(v) for v in self.outlier_views)
        if self.noise_px < 0:
            raise ConfigError("noise_px must be nonnegative")
        if not 0.0 < self.refine_noise_decay <= 1.0:
            raise ConfigError("refine_noise_decay must be in (0, 1]")


@dataclass
class FilesConfig:
    """Hypothesis files on disk, one file per view."""

    dir: str = ""
    pattern: str = "view_{view:03d}.txt"


@dataclass
class AdapterConfig:
    """External adapter command that writes hypothesis files."""

    cmd: tuple = ()

    def __post_init__(self):
        self.cmd = tuple(str(c) for c in self.cmd)


@dataclass
class PipelineConfig:
    scene_mesh: str = ""
    scene_sdf: str = ""
    body: str = ""
    point: tuple = (0.0, 0.0, 0.0)
    prompt: str = "a woman sitting"
    provider: str = "synthetic"
    refinement_count: int = 1
    seed: int = 0
    width: int = 512
    height: int = 512
    sdf_dims: int = 64
    sdf_padding: float = 0.2
    mask_kernel: int = 11
    out_dir: str = "out"
    sampling: CameraSamplingConfig = field(default_factory=CameraSamplingConfig)
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    optim: OptimConfig = field(default_factory=OptimConfig)
    masking: MaskConfig = field(default_factory=MaskConfig)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    files: FilesConfig = field(default_factory=FilesConfig)
    adapter: AdapterConfig = field(default_factory=AdapterConfig)

    def __post_init__(self):
        self.point = tuple(float(v) for v in np.asarray(self.point).reshape(3))
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}, got {self.provider!r}")
        if self.refinement_count < 0:
            raise ConfigError("refinement_count must be >= 0")
        if self.mask_kernel < 1 or self.mask_kernel % 2 == 0:
            raise ConfigError("mask_kernel must be odd and >= 1")


_SECTIONS = {
    "sampling": CameraSamplingConfig,
    "weights": EnergyWeights,
    "optim": OptimConfig,
    "masking": MaskConfig,
    "synthetic": SyntheticConfig,
    "files": FilesConfig,
    "adapter": AdapterConfig,
}


def _build_section(cls, current, data: dict):
    known = {f.name: f for f in fields(cls)}
    bad = set(data) - set(known)
    if bad:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(bad)}")
    merged = {f.name: getattr(current, f.name) for f in fields(cls)}
    merged.update(data)
    try:
        return cls(**merged)
    except (ValueError, TypeError, RuntimeError) as e:
        raise ConfigError(f"{cls.__name__}: {e}") from e


def config_from_dict(data: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    base = base if base is not None else PipelineConfig()
    data = dict(data or {})
    kwargs = {f.name: getattr(base, f.name) for f in fields(PipelineConfig)}
    for name, cls in _SECTIONS.items():
        if name in data:
            section = data.pop(name)
            if not isinstance(section, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            kwargs[name] = _build_section(cls, kwargs[name], section)
    known = {f.name for f in fields(PipelineConfig)}
    bad = set(data) - known
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    kwargs.update(data)
    try:
        return PipelineConfig(**kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def config_to_dict(cfg: PipelineConfig) -> dict:
    out = {}
    for f in fields(PipelineConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            out[f.name] = {sf.name: _plain(getattr(value, sf.name))
                           for sf in fields(type(value))}
        else:
            out[f.name] = _plain(value)
    return out


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def default_config() -> PipelineConfig:
    return PipelineConfig()


def shipped_default_dict() -> dict:
    """The default_config.yaml bundled with the package, parsed."""
    text = resources.files("poselift.data").joinpath("default_config.yaml").read_text()
    return yaml.safe_load(text)


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, overlaid with an optional YAML file, then explicit overrides."""
    cfg = default_config()
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        if data is not None:
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
            cfg = config_from_dict(data, cfg)
    if overrides:
        cfg = config_from_dict(overrides, cfg)
    return cfg


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def replace(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return dataclasses.replace(cfg, **changes)
