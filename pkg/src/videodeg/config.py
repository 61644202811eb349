"""Pipeline configuration: dataclasses with strict dict/YAML loading.

Schema (version 1)::

    version: 1
    seed: 0
    shuffle: true
    clamp_mode: each            # each | final
    param_scope: per_clip       # per_clip | per_frame
    degradations:
      <type>:                   # blur resize gaussian poisson speckle isp jpeg video
        enabled: true
        probability: 1.0
        ...type-specific ranges (see the *Ranges classes)

Omitted keys take the defaults below; unknown keys are an error.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .isp import DEFAULT_CCM, PATTERNS
from .kernels import FAMILIES, FAMILY_PROBS
from .codec import EXTERNAL_CODECS
from .resample import MODES

CONFIG_VERSION = 1
TYPES = ("blur", "resize", "gaussian", "poisson", "speckle", "isp", "jpeg", "video")


class ConfigError(ValueError):
    """Invalid or unreadable pipeline configuration."""


def _check_range(name: str, rng, lo_bound=None, hi_bound=None):
    if len(rng) != 2 or rng[0] > rng[1]:
        raise ConfigError(f"{name}: expected [low, high] with low <= high, got {list(rng)}")
    if lo_bound is not None and rng[0] < lo_bound:
        raise ConfigError(f"{name}: low end {rng[0]} below {lo_bound}")
    if hi_bound is not None and rng[1] > hi_bound:
        raise ConfigError(f"{name}: high end {rng[1]} above {hi_bound}")


def _check_probs(name: str, options, probs):
    if len(options) != len(probs) or not options:
        raise ConfigError(f"{name}: options and probabilities differ in length")
    if any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
        raise ConfigError(f"{name}: probabilities must be nonnegative and sum to 1")


@dataclass
class StageConfig:
    enabled: bool = True
    probability: float = 1.0

    def validate(self, name: str):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError(f"{name}.probability must lie in [0, 1]")


@dataclass
class BlurConfig(StageConfig):
    families: tuple[str, ...] = FAMILIES
    family_probs: tuple[float, ...] = FAMILY_PROBS
    sizes: tuple[int, ...] = tuple(range(7, 22, 2))
    sigma: tuple[float, float] = (0.2, 3.0)
    beta_generalized: tuple[float, float] = (0.5, 4.0)
    beta_plateau: tuple[float, float] = (1.0, 2.0)
    omega: tuple[float, float] = (math.pi / 3, math.pi)
    sinc_window: str = "none"

    def validate(self, name: str):
        super().validate(name)
        _check_probs(f"{name}.family_probs", self.families, self.family_probs)
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise ConfigError(f"{name}.families: unknown {bad}")
        if not self.sizes or any(s < 1 or s % 2 == 0 for s in self.sizes):
            raise ConfigError(f"{name}.sizes must be odd positive integers")
        _check_range(f"{name}.sigma", self.sigma, 1e-6)
        _check_range(f"{name}.beta_generalized", self.beta_generalized, 1e-6)
        _check_range(f"{name}.beta_plateau", self.beta_plateau, 1e-6)
        _check_range(f"{name}.omega", self.omega, 1e-6, math.pi)
        if self.sinc_window not in ("none", "raised_cosine"):
            raise ConfigError(f"{name}.sinc_window must be none or raised_cosine")


@dataclass
class ResizeConfig(StageConfig):
    scale: tuple[float, float] = (0.5, 2.0)
    modes: tuple[str, ...] = MODES
    mode_probs: tuple[float, ...] = (1 / 3, 1 / 3, 1 / 3)
    bicubic_a: float = -0.5

    def validate(self, name: str):
        super().validate(name)
        _check_range(f"{name}.scale", self.scale, 1e-6)
        _check_probs(f"{name}.mode_probs", self.modes, self.mode_probs)
        if any(m not in MODES for m in self.modes):
            raise ConfigError(f"{name}.modes must be drawn from {MODES}")


@dataclass
class GaussianConfig(StageConfig):
    sigma: tuple[float, float] = (2.0, 50.0)
    grayscale_prob: float = 0.4

    def validate(self, name: str):
        super().validate(name)
        _check_range(f"{name}.sigma", self.sigma, 0.0)
        if not 0 <= self.grayscale_prob <= 1:
            raise ConfigError(f"{name}.grayscale_prob must lie in [0, 1]")


@dataclass
class PoissonConfig(StageConfig):
    alpha: tuple[float, float] = (2.0, 4.0)
    grayscale_prob: float = 0.5

    def validate(self, name: str):
        super().validate(name)
        # 10**alpha * x must stay a valid Poisson rate
        _check_range(f"{name}.alpha", self.alpha, -6.0, 7.0)
        if not 0 <= self.grayscale_prob <= 1:
            raise ConfigError(f"{name}.grayscale_prob must lie in [0, 1]")


@dataclass
class SpeckleConfig(StageConfig):
    level: tuple[float, float] = (0.0, 50.0)
    grayscale_prob: float = 0.0

    def validate(self, name: str):
        super().validate(name)
        _check_range(f"{name}.level", self.level, 0.0)
        if not 0 <= self.grayscale_prob <= 1:
            raise ConfigError(f"{name}.grayscale_prob must lie in [0, 1]")


@dataclass
class IspConfig(StageConfig):
    patterns: tuple[str, ...] = PATTERNS
    shot_gain: tuple[float, float] = (1e-4, 1e-2)
    read_sigma: tuple[float, float] = (1e-3, 1e-2)
    wb_r: tuple[float, float] = (1.2, 2.4)
    wb_b: tuple[float, float] = (1.2, 2.4)
    ccm: tuple[tuple[float, ...], ...] = DEFAULT_CCM

    def validate(self, name: str):
        super().validate(name)
        if not self.patterns or any(p not in PATTERNS for p in self.patterns):
            raise ConfigError(f"{name}.patterns must be drawn from {PATTERNS}")
        _check_range(f"{name}.shot_gain", self.shot_gain, 0.0)
        _check_range(f"{name}.read_sigma", self.read_sigma, 0.0)
        _check_range(f"{name}.wb_r", self.wb_r, 1e-6)
        _check_range(f"{name}.wb_b", self.wb_b, 1e-6)
        if len(self.ccm) != 3 or any(len(r) != 3 for r in self.ccm):
            raise ConfigError(f"{name}.ccm must be 3x3")
        if any(not math.isclose(sum(r), 1.0, abs_tol=1e-6) for r in self.ccm):
            raise ConfigError(f"{name}.ccm rows must sum to 1")


@dataclass
class JpegConfig(StageConfig):
    quality: tuple[int, int] = (30, 95)
    chroma_subsampling: str = "4:2:0"

    def validate(self, name: str):
        super().validate(name)
        _check_range(f"{name}.quality", self.quality, 1, 100)
        if any(int(q) != q for q in self.quality):
            raise ConfigError(f"{name}.quality bounds must be integers")
        if self.chroma_subsampling not in ("4:4:4", "4:2:0"):
            raise ConfigError(f"{name}.chroma_subsampling must be 4:4:4 or 4:2:0")


@dataclass
class VideoConfig(StageConfig):
    backend: str = "builtin"
    codecs: tuple[str, ...] = EXTERNAL_CODECS
    bitrate: tuple[float, float] = (1e4, 1e5)

    def validate(self, name: str):
        super().validate(name)
        if self.backend not in ("builtin", "external"):
            raise ConfigError(f"{name}.backend must be builtin or external")
        if not self.codecs or any(c not in EXTERNAL_CODECS for c in self.codecs):
            raise ConfigError(f"{name}.codecs must be drawn from {EXTERNAL_CODECS}")
        _check_range(f"{name}.bitrate", self.bitrate, 1.0)


STAGE_CLASSES: dict[str, type[StageConfig]] = {
    "blur": BlurConfig,
    "resize": ResizeConfig,
    "gaussian": GaussianConfig,
    "poisson": PoissonConfig,
    "speckle": SpeckleConfig,
    "isp": IspConfig,
    "jpeg": JpegConfig,
    "video": VideoConfig,
}


def _default_stages() -> dict[str, StageConfig]:
    return {name: cls() for name, cls in STAGE_CLASSES.items()}


@dataclass
class PipelineConfig:
    seed: int = 0
    shuffle: bool = True
    clamp_each_stage: bool = True
    param_scope: str = "per_clip"
    stages: dict[str, StageConfig] = field(default_factory=_default_stages)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.param_scope not in ("per_clip", "per_frame"):
            raise ConfigError("param_scope must be per_clip or per_frame")
        unknown = set(self.stages) - set(TYPES)
        if unknown:
            raise ConfigError(f"unknown degradation types: {sorted(unknown)}")
        for name in TYPES:
            self.stages.setdefault(name, STAGE_CLASSES[name]())
            self.stages[name].validate(f"degradations.{name}")
        if not self.enabled_types():
            raise ConfigError("at least one degradation type must be enabled")

    def enabled_types(self) -> list[str]:
        return [t for t in TYPES if self.stages[t].enabled]

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, stages=dict(self.stages), **changes)

    @classmethod
    def only(cls, *types: str, **kwargs) -> "PipelineConfig":
        """Config with just ``types`` enabled; ``kwargs`` may hold per-type overrides as dicts."""
        stages = {}
        for name in TYPES:
            overrides = kwargs.pop(name, {})
            stages[name] = _build(STAGE_CLASSES[name], {"enabled": name in types, **overrides}, f"degradations.{name}")
        return cls(stages=stages, **kwargs)

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "shuffle": self.shuffle,
            "clamp_mode": "each" if self.clamp_each_stage else "final",
            "param_scope": self.param_scope,
            "degradations": {name: _plain(dataclasses.asdict(self.stages[name])) for name in TYPES},
        }

    @classmethod
    def from_dict(cls, data: Any) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        allowed = {"version", "seed", "shuffle", "clamp_mode", "param_scope", "degradations"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("version") != CONFIG_VERSION:
            raise ConfigError(f"config version must be {CONFIG_VERSION}, got {data.get('version')!r}")
        clamp_mode = data.get("clamp_mode", "each")
        if clamp_mode not in ("each", "final"):
            raise ConfigError("clamp_mode must be each or final")
        degradations = data.get("degradations", {}) or {}
        if not isinstance(degradations, dict):
            raise ConfigError("degradations must be a mapping")
        unknown = set(degradations) - set(TYPES)
        if unknown:
            raise ConfigError(f"unknown degradation types: {sorted(unknown)}")
        stages = {
            name: _build(STAGE_CLASSES[name], degradations.get(name) or {}, f"degradations.{name}") for name in TYPES
        }
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        for key in ("shuffle",):
            if key in data and not isinstance(data[key], bool):
                raise ConfigError(f"{key} must be a boolean")
        return cls(
            seed=seed,
            shuffle=data.get("shuffle", True),
            clamp_each_stage=clamp_mode == "each",
            param_scope=data.get("param_scope", "per_clip"),
            stages=stages,
        )


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    defaults = cls()
    kwargs = {}
    for key, value in data.items():
        default = getattr(defaults, key)
        value = _freeze(value)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where}.{key} must be a boolean")
        elif isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where}.{key} must be a number")
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"{where}.{key} must be a string")
        elif isinstance(default, tuple):
            if not isinstance(value, tuple):
                raise ConfigError(f"{where}.{key} must be a list")
        kwargs[key] = value
    obj = cls(**kwargs)
    obj.validate(where)
    return obj


def load_config(path: str | Path) -> PipelineConfig:
    """Read a YAML (or JSON) config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return PipelineConfig.from_dict(data)
