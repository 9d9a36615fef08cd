"""Deterministic synthetic stacks for verification backends and tests.

A synthetic stack is carved out of one smooth random "world" image, so its
layers describe a single continuous scene: every render is seamless and the
cross-level overlaps agree exactly.  The world is band-limited relative to
the total magnification (its detail scale is `base` pixels at the deepest
layer), which keeps crop/upscale resampling losses well below the blending
fixed-point tolerance.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .blending import upscale_bilinear
from .core import ZoomSchedule, ZoomStack, center_crop, downscale
from .pyramid import _blur_axis


def synthetic_stack(
    schedule: ZoomSchedule,
    seed: int,
    base: int = 8,
    blur_passes: int = 2,
    amplitude: float = 0.8,
) -> ZoomStack:
    """Smooth, seamless, exactly self-consistent stack derived from one world."""
    top = schedule.p ** (schedule.N - 1)
    up = base * top
    side_h, side_w = schedule.H * top, schedule.W * top
    g = rng.stream(seed, rng.TARGET_SYNTH, 0)
    small = g.standard_normal((max(side_h // up, 2), max(side_w // up, 2), schedule.C))
    world = upscale_bilinear(small, up)
    for _ in range(blur_passes):
        world = _blur_axis(_blur_axis(world, -3), -2)
    peak = np.max(np.abs(world))
    if peak > 0:
        world = world / peak * amplitude
    world = world[: side_h, : side_w]
    layers = []
    for i in range(schedule.N):
        k = schedule.N - 1 - i
        crop = center_crop(world, schedule.H * schedule.p**k, schedule.W * schedule.p**k)
        layers.append(downscale(crop, schedule.p, k, pad=False))
    return ZoomStack(schedule, np.stack(layers))


def synthetic_renders(schedule: ZoomSchedule, seed: int, **kwargs) -> np.ndarray:
    """Per-level renders of a synthetic stack, stacked (N, H, W, C)."""
    stack = synthetic_stack(schedule, seed, **kwargs)
    return np.stack([stack.render(i) for i in range(schedule.N)])
