"""Multi-scale joint sampling.

One denoising step, run in lockstep for every zoom level: render each level
from the current stack, advance each level's noisy image with a DDPM step fed
by zoom-consistent shared noise, query the denoiser (conditional and
unconditional) at the new timestep, form guided clean-image estimates, then
consolidate the estimates back into the stack by multi-resolution blending.
The stack is the only cross-level coupling; every per-level computation can
run in parallel because all randomness comes from keyed counter-based
streams.

Ablation modes: "naive" swaps the blend for pixel averaging, "iterative"
updates one layer at a time against the current stack with no joint blending,
"independent" runs each level as its own single-level chain, and noise_mode
"independent" drops the shared-noise coupling.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng
from .blending import ObservationSet, blend_stack, naive_blend
from .core import NoiseStack, ZoomSchedule, ZoomStack, composite_levels, render_noise
from .denoisers import UNCOND, Denoiser, LevelShiftDenoiser, query
from .diffusion import (
    SCHEDULE_KINDS,
    NoiseSchedule,
    cfg_combine,
    ddpm_update,
    make_schedule,
    predict_clean,
)
from .errors import BackendError, ValidationError
from .grounding import GroundingConfig, apply_grounding
from .scenespec import BLEND_MODES, NOISE_MODES, SceneSpec


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs of the sampling run; modes mirror the scene-file vocabulary."""

    omega: float = 7.5
    T: int = 256
    seed: int = 0
    noise_mode: str = "shared-exact"
    blend_mode: str = "multiresolution"
    schedule_kind: str = "cosine"
    grounding: GroundingConfig | None = None

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValidationError(f"T must be >= 1, got {self.T}")
        if self.omega < 0:
            raise ValidationError(f"omega must be >= 0, got {self.omega}")
        if self.noise_mode not in NOISE_MODES:
            raise ValidationError(f"noise mode {self.noise_mode!r} not in {NOISE_MODES}")
        if self.blend_mode not in BLEND_MODES:
            raise ValidationError(f"blend mode {self.blend_mode!r} not in {BLEND_MODES}")
        if self.schedule_kind not in SCHEDULE_KINDS:
            raise ValidationError(
                f"schedule kind {self.schedule_kind!r} not in {SCHEDULE_KINDS}"
            )
        if self.grounding is not None and self.blend_mode in ("iterative", "independent"):
            raise ValidationError(
                f"grounding is not supported with blend mode {self.blend_mode!r}"
            )

    @classmethod
    def from_scene(cls, scene: SceneSpec, grounding: GroundingConfig | None = None) -> "SamplerConfig":
        return cls(
            omega=scene.omega,
            T=scene.steps,
            seed=scene.seed,
            noise_mode=scene.noise_mode,
            blend_mode=scene.blend_mode,
            schedule_kind=scene.schedule_kind,
            grounding=grounding,
        )


@dataclass
class StepRecord:
    t: int
    levels: list[dict]
    grounding_loss: float | None = None

    def to_json(self) -> str:
        doc = {"t": self.t, "levels": self.levels}
        if self.grounding_loss is not None:
            doc["grounding_loss"] = self.grounding_loss
        return json.dumps(doc)


@dataclass
class SamplingTrace:
    """Per-step sampling log; exactly one record per timestep."""

    records: list[StepRecord] = field(default_factory=list)
    stack: ZoomStack | None = None
    wall_time: float = 0.0

    def write(self, path: str | Path) -> None:
        lines = [rec.to_json() for rec in self.records]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _level_stats(i: int, xhat: np.ndarray) -> dict:
    return {
        "level": i,
        "min": float(np.min(xhat)),
        "max": float(np.max(xhat)),
        "mean": float(np.mean(xhat)),
    }


def _init_latents(schedule: ZoomSchedule, seed: int) -> np.ndarray:
    shape = schedule.layer_shape()
    return np.stack(
        [rng.stream(seed, rng.INIT_Z, i).standard_normal(shape) for i in range(schedule.N)]
    )


def _step_noise_stack(schedule: ZoomSchedule, seed: int, t: int) -> NoiseStack:
    shape = schedule.layer_shape()
    layers = np.stack(
        [rng.stream(seed, rng.STEP_NOISE, t, j).standard_normal(shape) for j in range(schedule.N)]
    )
    return NoiseStack(schedule, layers)


def _level_noise(
    schedule: ZoomSchedule, config: SamplerConfig, noise: NoiseStack | None, t: int, i: int
) -> np.ndarray:
    if config.noise_mode == "independent":
        return rng.stream(config.seed, rng.INDEP_NOISE, t, i).standard_normal(
            schedule.layer_shape()
        )
    mode = "exact" if config.noise_mode == "shared-exact" else "paper"
    return render_noise(noise, i, mode)


def _denoise_level(
    denoiser: Denoiser,
    z: np.ndarray,
    t: int,
    prompt: str,
    level: int,
    omega: float,
    sched: NoiseSchedule,
) -> np.ndarray:
    eps_cond = query(denoiser, z, t, prompt, level)
    eps_uncond = query(denoiser, z, t, UNCOND, level)
    xhat = predict_clean(z, cfg_combine(eps_cond, eps_uncond, omega), t, sched)
    if not np.all(np.isfinite(xhat)):
        raise BackendError(f"non-finite clean-image estimate at t={t}, level={level}")
    return xhat


def joint_sample(
    scene: SceneSpec, denoiser: Denoiser, config: SamplerConfig
) -> tuple[ZoomStack, SamplingTrace]:
    """Run the full joint sampling loop; deterministic given (scene, config)."""
    if len(scene.prompts) != scene.schedule.N:
        raise ValidationError("scene prompt count does not match schedule")
    if config.blend_mode == "independent":
        return _sample_independent(scene, denoiser, config)
    if config.blend_mode == "iterative":
        return _sample_iterative(scene, denoiser, config)
    return _sample_joint(scene, denoiser, config)


def _sample_joint(
    scene: SceneSpec, denoiser: Denoiser, config: SamplerConfig
) -> tuple[ZoomStack, SamplingTrace]:
    zs = scene.schedule
    sched = make_schedule(config.T, config.schedule_kind)
    grounding = config.grounding
    if grounding is not None and grounding.target.shape != zs.layer_shape():
        raise ValidationError(
            f"grounding target shape {grounding.target.shape} != {zs.layer_shape()}"
        )
    started = time.perf_counter()
    trace = SamplingTrace()
    layers = np.zeros((zs.N, *zs.layer_shape()))
    z = _init_latents(zs, config.seed)
    for t in range(config.T, 0, -1):
        noise = None
        if config.noise_mode != "independent":
            noise = _step_noise_stack(zs, config.seed, t)
        xhat = np.empty_like(layers)
        for i in range(zs.N):
            x_render = composite_levels(layers, i, zs.p)
            eps_i = _level_noise(zs, config, noise, t, i)
            z[i] = ddpm_update(z[i], x_render, eps_i, t, sched)
            xhat[i] = _denoise_level(
                denoiser, z[i], t - 1, scene.prompts[i], i, config.omega, sched
            )
        obs = ObservationSet(zs, xhat)
        grounding_loss = None
        if grounding is not None:
            obs, _, losses = apply_grounding(obs, grounding)
            grounding_loss = losses[-1]
        if config.blend_mode == "naive":
            blended = naive_blend(obs)
        else:
            blended = blend_stack(obs)
        layers = blended.layers
        trace.records.append(
            StepRecord(
                t=t,
                levels=[_level_stats(i, obs.estimates[i]) for i in range(zs.N)],
                grounding_loss=grounding_loss,
            )
        )
    stack = ZoomStack(zs, layers)
    trace.stack = stack
    trace.wall_time = time.perf_counter() - started
    return stack, trace


def _sample_iterative(
    scene: SceneSpec, denoiser: Denoiser, config: SamplerConfig
) -> tuple[ZoomStack, SamplingTrace]:
    """Ablation: one sampling step per level, written straight into its layer.

    Each level still steps against a render of the current stack, so content
    flows from zoomed-in layers outward, but there is no joint blending.
    """
    zs = scene.schedule
    sched = make_schedule(config.T, config.schedule_kind)
    started = time.perf_counter()
    trace = SamplingTrace()
    layers = np.zeros((zs.N, *zs.layer_shape()))
    z = _init_latents(zs, config.seed)
    for t in range(config.T, 0, -1):
        noise = None
        if config.noise_mode != "independent":
            noise = _step_noise_stack(zs, config.seed, t)
        stats = []
        for i in range(zs.N):
            x_render = composite_levels(layers, i, zs.p)
            eps_i = _level_noise(zs, config, noise, t, i)
            z[i] = ddpm_update(z[i], x_render, eps_i, t, sched)
            xhat_i = _denoise_level(
                denoiser, z[i], t - 1, scene.prompts[i], i, config.omega, sched
            )
            layers[i] = xhat_i
            stats.append(_level_stats(i, xhat_i))
        trace.records.append(StepRecord(t=t, levels=stats))
    stack = ZoomStack(zs, layers)
    trace.stack = stack
    trace.wall_time = time.perf_counter() - started
    return stack, trace


def _sample_independent(
    scene: SceneSpec, denoiser: Denoiser, config: SamplerConfig
) -> tuple[ZoomStack, SamplingTrace]:
    """Baseline: N fully separate chains, one per level.

    Level i runs as a single-level scene seeded with derive_level_seed(seed, i),
    so its output is bit-identical to an N=1 run with that seed.  The backend
    still sees the true level index.
    """
    zs = scene.schedule
    started = time.perf_counter()
    sub_schedule = ZoomSchedule(p=zs.p, N=1, H=zs.H, W=zs.W, C=zs.C)
    layers = []
    sub_traces = []
    for i in range(zs.N):
        sub_scene = SceneSpec(
            prompts=(scene.prompts[i],),
            schedule=sub_schedule,
            seed=rng.derive_level_seed(config.seed, i),
            omega=scene.omega,
            steps=scene.steps,
            noise_mode=scene.noise_mode,
            blend_mode="multiresolution",
            schedule_kind=scene.schedule_kind,
        )
        sub_config = replace(
            config,
            seed=sub_scene.seed,
            blend_mode="multiresolution",
        )
        sub_stack, sub_trace = _sample_joint(
            sub_scene, LevelShiftDenoiser(denoiser, {0: i}), sub_config
        )
        layers.append(sub_stack.layers[0])
        sub_traces.append(sub_trace)
    records = []
    for step_idx in range(config.T):
        t = sub_traces[0].records[step_idx].t
        level_stats = []
        for i, sub in enumerate(sub_traces):
            stats = dict(sub.records[step_idx].levels[0])
            stats["level"] = i
            level_stats.append(stats)
        records.append(StepRecord(t=t, levels=level_stats))
    stack = ZoomStack(zs, np.stack(layers))
    trace = SamplingTrace(records=records, stack=stack, wall_time=time.perf_counter() - started)
    return stack, trace


def sample_iterative(
    scene: SceneSpec, denoiser: Denoiser, config: SamplerConfig
) -> ZoomStack:
    """Iterative-update ablation; same contract as joint_sample's stack."""
    stack, _ = _sample_iterative(scene, denoiser, config)
    return stack
