"""Sampling, shuffling and applying degradation sequences.

Random streams, all derived from one clip stream ``clip_rng``
(``SeededRng(seed).spawn("clip", index)`` inside ``degrade_dataset``):

* ``clip_rng.spawn("plan", "include", t)``  inclusion draw for type ``t``
* ``clip_rng.spawn("plan", "params", t)``   parameter draws for type ``t``
* ``clip_rng.spawn("plan", "order")``       Fisher-Yates shuffle of the included types
* ``clip_rng.spawn("apply", t, frame)``     noise realization of type ``t`` on one frame

Keying every stream by type name keeps stages independent: editing one
type's range, or reordering stages, leaves the other stages' draws intact.

Without shuffling, stages run in ``TYPES`` order:
blur, resize, gaussian, poisson, speckle, isp, jpeg, video.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .codec import JpegSpec, VideoCodecSpec, jpeg_roundtrip, video_compress
from .config import TYPES, PipelineConfig
from .core import Clip
from .isp import IspNoiseSpec, add_isp_noise
from .kernels import KernelRanges, KernelSpec, convolve, make_kernel, sample_kernel_spec
from .noise import (
    GaussianNoiseSpec,
    PoissonNoiseSpec,
    SpeckleNoiseSpec,
    add_gaussian,
    add_poisson,
    add_speckle,
)
from .resample import ResizeSpec, resizing_blur
from .rng import SeededRng

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1

SPEC_TYPES = {
    "blur": KernelSpec,
    "resize": ResizeSpec,
    "gaussian": GaussianNoiseSpec,
    "poisson": PoissonNoiseSpec,
    "speckle": SpeckleNoiseSpec,
    "isp": IspNoiseSpec,
    "jpeg": JpegSpec,
    "video": VideoCodecSpec,
}

# stages whose operators expect unit-range input when clamping is deferred
_UNIT_INPUT = {"poisson", "isp", "jpeg"}


class StageError(RuntimeError):
    def __init__(self, index: int, kind: str, cause: BaseException):
        super().__init__(f"stage {index} ({kind}) failed: {cause}")
        self.index = index
        self.kind = kind


@dataclass(frozen=True)
class Stage:
    kind: str
    specs: tuple  # one spec per clip, or one per frame

    def spec_for(self, frame_index: int):
        return self.specs[0] if len(self.specs) == 1 else self.specs[frame_index]

    def to_dict(self) -> dict:
        return {"type": self.kind, "params": [s.to_dict() for s in self.specs]}


@dataclass(frozen=True)
class PipelinePlan:
    stages: tuple[Stage, ...]
    permutation: tuple[int, ...]
    seed: int = 0
    stream_id: int = 0
    clamp_each_stage: bool = True

    @property
    def order(self) -> list[str]:
        return [s.kind for s in self.stages]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "stream_id": self.stream_id,
            "clamp_each_stage": self.clamp_each_stage,
            "order": self.order,
            "permutation": list(self.permutation),
            "stages": [s.to_dict() for s in self.stages],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelinePlan":
        stages = []
        for item in data["stages"]:
            spec_cls = SPEC_TYPES[item["type"]]
            stages.append(Stage(item["type"], tuple(_spec_from_dict(spec_cls, p) for p in item["params"])))
        return cls(
            stages=tuple(stages),
            permutation=tuple(data["permutation"]),
            seed=int(data["seed"]),
            stream_id=int(data["stream_id"]),
            clamp_each_stage=bool(data.get("clamp_each_stage", True)),
        )


def _spec_from_dict(spec_cls, params: dict):
    params = dict(params)
    if spec_cls is IspNoiseSpec:
        params["wb_gains"] = tuple(params["wb_gains"])
        params["ccm"] = tuple(tuple(r) for r in params["ccm"])
    return spec_cls(**params)


def _log_uniform(rng: SeededRng, lo: float, hi: float) -> float:
    if lo > 0 and hi > lo:
        return math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return rng.uniform(lo, hi)


def sample_spec(kind: str, cfg, rng: SeededRng):
    """Draw one parameter set for degradation ``kind`` from its config ranges."""
    if kind == "blur":
        ranges = KernelRanges(
            families=cfg.families,
            probs=cfg.family_probs,
            sizes=cfg.sizes,
            sigma=cfg.sigma,
            beta_generalized=cfg.beta_generalized,
            beta_plateau=cfg.beta_plateau,
            omega=cfg.omega,
            sinc_window=cfg.sinc_window,
        )
        return sample_kernel_spec(rng, ranges)
    if kind == "resize":
        scale = rng.uniform(*cfg.scale)
        mode = cfg.modes[rng.categorical(cfg.mode_probs)]
        return ResizeSpec(scale, mode, cfg.bicubic_a)
    if kind == "gaussian":
        sigma = rng.uniform(*cfg.sigma)
        return GaussianNoiseSpec(sigma, rng.random() < cfg.grayscale_prob)
    if kind == "poisson":
        alpha = rng.uniform(*cfg.alpha)
        return PoissonNoiseSpec(alpha, rng.random() < cfg.grayscale_prob)
    if kind == "speckle":
        level = rng.uniform(*cfg.level)
        return SpeckleNoiseSpec(level, rng.random() < cfg.grayscale_prob)
    if kind == "isp":
        pattern = cfg.patterns[rng.integers(0, len(cfg.patterns))]
        shot = _log_uniform(rng, *cfg.shot_gain)
        read = _log_uniform(rng, *cfg.read_sigma)
        wb = (rng.uniform(*cfg.wb_r), rng.uniform(*cfg.wb_b))
        return IspNoiseSpec(pattern, shot, read, wb, cfg.ccm)
    if kind == "jpeg":
        lo, hi = (int(q) for q in cfg.quality)
        return JpegSpec(rng.integers(lo, hi + 1), cfg.chroma_subsampling)
    if kind == "video":
        codec = cfg.codecs[rng.integers(0, len(cfg.codecs))]
        bitrate = rng.uniform(*cfg.bitrate)
        return VideoCodecSpec(cfg.backend, codec, bitrate)
    raise ValueError(f"unknown degradation type {kind!r}")


def sample_plan(config: PipelineConfig, rng: SeededRng, n_frames: int = 1) -> PipelinePlan:
    included = []
    for kind in config.enabled_types():
        p = config.stages[kind].probability
        if p >= 1.0 or (p > 0.0 and rng.spawn("plan", "include", kind).random() < p):
            included.append(kind)

    per_frame = config.param_scope == "per_frame"
    stages = []
    for kind in included:
        prng = rng.spawn("plan", "params", kind)
        count = n_frames if per_frame and kind != "video" else 1
        stages.append(Stage(kind, tuple(sample_spec(kind, config.stages[kind], prng) for _ in range(count))))

    perm = tuple(range(len(stages)))
    if config.shuffle:
        perm = tuple(rng.spawn("plan", "order").permutation(len(stages)))
    return PipelinePlan(
        stages=tuple(stages[i] for i in perm),
        permutation=perm,
        seed=rng.seed,
        stream_id=rng.stream_id,
        clamp_each_stage=config.clamp_each_stage,
    )


def fixed_order(plan: PipelinePlan) -> PipelinePlan:
    """The same stages and parameters in canonical order."""
    stages = sorted(plan.stages, key=lambda s: TYPES.index(s.kind))
    return PipelinePlan(tuple(stages), tuple(range(len(stages))), plan.seed, plan.stream_id, plan.clamp_each_stage)


def stage_rng(rng: SeededRng, kind: str, frame_index: int) -> SeededRng:
    return rng.spawn("apply", kind, frame_index)


def apply_frame_stage(kind: str, frame: np.ndarray, spec, rng: SeededRng) -> np.ndarray:
    if kind == "blur":
        return convolve(frame, make_kernel(spec))
    if kind == "resize":
        return resizing_blur(frame, spec)
    if kind == "gaussian":
        return add_gaussian(frame, spec, rng)
    if kind == "poisson":
        return add_poisson(frame, spec, rng)
    if kind == "speckle":
        return add_speckle(frame, spec, rng)
    if kind == "isp":
        return add_isp_noise(frame, spec, rng)
    if kind == "jpeg":
        return jpeg_roundtrip(frame, spec)
    raise ValueError(f"{kind!r} is not a per-frame degradation")


def apply_stage(frames: np.ndarray, stage: Stage, rng: SeededRng, clamp_input: bool = False) -> np.ndarray:
    if clamp_input:
        frames = np.clip(frames, 0.0, 1.0)
    if stage.kind == "video":
        return video_compress(frames, stage.spec_for(0))
    out = np.empty_like(frames)
    for t in range(frames.shape[0]):
        out[t] = apply_frame_stage(stage.kind, frames[t], stage.spec_for(t), stage_rng(rng, stage.kind, t))
    return out


def apply_plan(clip: Clip, plan: PipelinePlan, rng: SeededRng, clamp_each_stage: bool | None = None) -> Clip:
    """Run ``plan`` on ``clip``; the first stage in the plan is applied first.

    With ``clamp_each_stage`` false, only the final output (and the inputs of
    stages that need unit range) are clamped.
    """
    if clamp_each_stage is None:
        clamp_each_stage = plan.clamp_each_stage
    if not plan.stages:
        return clip
    frames = clip.frames
    for i, stage in enumerate(plan.stages):
        try:
            frames = apply_stage(frames, stage, rng, clamp_input=not clamp_each_stage and stage.kind in _UNIT_INPUT)
        except Exception as exc:
            raise StageError(i, stage.kind, exc) from exc
        if clamp_each_stage:
            frames = np.clip(frames, 0.0, 1.0)
    return clip.with_frames(np.clip(frames, 0.0, 1.0))


def clip_stream(seed: int, index: int) -> SeededRng:
    return SeededRng(seed).spawn("clip", index)


ClipSource = Union[Clip, Callable[[], Clip]]


@dataclass
class DatasetResult:
    clips: list  # degraded Clip per input, None on failure or when streamed to a sink
    manifest: dict

    @property
    def failures(self) -> list[str]:
        return self.manifest["failures"]


def _degrade_one(index: int, name: str, source: ClipSource, config: PipelineConfig, sink):
    rng = clip_stream(config.seed, index)
    entry = {"index": index, "name": name, "stream_id": rng.stream_id}
    try:
        clip = source() if callable(source) else source
        plan = sample_plan(config, rng, len(clip))
        entry["n_frames"] = len(clip)
        entry["plan"] = plan.to_dict()
        out = apply_plan(clip, plan, rng)
        if sink is not None:
            sink(index, name, out)
            out = None
        entry["status"] = "ok"
        return out, entry
    except Exception as exc:  # recorded in the manifest, processing continues
        log.warning("clip %s failed: %s", name, exc)
        entry["status"] = "failed"
        entry["error"] = f"{type(exc).__name__}: {exc}"
        return None, entry


def degrade_dataset(
    clips: Sequence[ClipSource],
    config: PipelineConfig,
    names: Sequence[str] | None = None,
    jobs: int = 1,
    sink: Callable[[int, str, Clip], None] | None = None,
) -> DatasetResult:
    """Degrade every clip with a fresh plan and return outputs plus a replay manifest.

    ``clips`` may hold loaders (zero-argument callables); a loader or stage
    failure marks that clip failed without stopping the others.
    """
    if not clips:
        raise ValueError("no clips to degrade")
    names = list(names) if names is not None else [f"clip_{i:04d}" for i in range(len(clips))]
    if len(names) != len(clips):
        raise ValueError("names and clips differ in length")
    work = [(i, names[i], clips[i], config, sink) for i in range(len(clips))]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda args: _degrade_one(*args), work))
    else:
        results = [_degrade_one(*args) for args in work]
    manifest = {
        "schema": "videodeg.manifest",
        "version": MANIFEST_VERSION,
        "seed": config.seed,
        "config": config.to_dict(),
        "clips": [entry for _, entry in results],
        "failures": [entry["name"] for _, entry in results if entry["status"] != "ok"],
    }
    return DatasetResult([out for out, _ in results], manifest)


def replay_clip(clip: Clip, entry: dict) -> Clip:
    """Re-run one manifest entry on its clean clip."""
    plan = PipelinePlan.from_dict(entry["plan"])
    return apply_plan(clip, plan, SeededRng(plan.seed, plan.stream_id))
