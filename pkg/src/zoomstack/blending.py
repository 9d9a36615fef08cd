"""Consolidating per-level clean-image estimates into one consistent stack.

Layer i of the stack is observed by every estimate at levels m <= i: the
central H/p^(i-m) x W/p^(i-m) crop of estimate m covers exactly the extent of
layer i.  Multi-resolution blending crops each such observation, upscales it
back to full resolution, decomposes it into a Laplacian pyramid, and averages
each frequency band over only the observations whose crop natively contains
that band: an observation upscaled by factor f carries no valid energy above
its Nyquist, so it contributes bands k >= ceil(log2(f)) only.  The averaged
pyramid is recomposed and replaces layer i.

naive_blend is the ablation baseline: a plain pixel average of the upscaled
crops, which mixes invalid low-passed content into every band and blurs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ZoomSchedule, ZoomStack, center_crop
from .errors import DimensionError, ValidationError
from .pyramid import DEFAULT_MIN_BAND, LaplacianPyramid, build_laplacian, recompose


@dataclass(frozen=True)
class ObservationSet:
    """Per-level clean-image estimates x-hat_0 .. x-hat_{N-1}, as (N, H, W, C)."""

    schedule: ZoomSchedule
    estimates: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        est = np.asarray(self.estimates, dtype=np.float64)
        expected = (self.schedule.N, self.schedule.H, self.schedule.W, self.schedule.C)
        if est.shape != expected:
            raise DimensionError(f"estimates shape {est.shape} != {expected}")
        if not np.all(np.isfinite(est)):
            raise ValidationError("non-finite values in observation set")
        object.__setattr__(self, "estimates", est)


def upscale_bilinear(x: np.ndarray, factor: int) -> np.ndarray:
    """Separable bilinear upscale by an integer factor, edge-clamped."""
    if factor < 1:
        raise ValidationError(f"upscale factor must be >= 1, got {factor}")
    if factor == 1:
        return np.array(x, dtype=np.float64, copy=True)
    out = np.asarray(x, dtype=np.float64)
    for axis in (-3, -2):
        out = _upscale_axis(out, factor, axis)
    return out


def _upscale_axis(x: np.ndarray, f: int, axis: int) -> np.ndarray:
    n = x.shape[axis]
    pos = (np.arange(n * f, dtype=np.float64) + 0.5) / f - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    left = np.take(x, np.clip(lo, 0, n - 1), axis=axis)
    right = np.take(x, np.clip(lo + 1, 0, n - 1), axis=axis)
    shape = [1] * x.ndim
    shape[axis] = n * f
    w = frac.reshape(shape)
    return left * (1.0 - w) + right * w


def band_threshold(p: int, distance: int) -> int:
    """First pyramid band an observation `distance` levels out contributes to."""
    if distance == 0:
        return 0
    return math.ceil(math.log2(p**distance))


def contributes(p: int, i: int, m: int, band: int) -> bool:
    """Whether observation m contributes to band `band` of layer i.

    The residual counts as band index K (one past the finest-first bands).
    """
    return band >= band_threshold(p, i - m)


def _observation_pyramids(
    obs: ObservationSet, i: int, min_band: int
) -> list[tuple[int, LaplacianPyramid]]:
    s = obs.schedule
    pyrs = []
    for m in range(i + 1):
        f = s.p ** (i - m)
        crop = center_crop(obs.estimates[m], s.H // f, s.W // f)
        pyrs.append((m, build_laplacian(upscale_bilinear(crop, f), min_band)))
    return pyrs


def blend_layer(
    obs: ObservationSet,
    i: int,
    min_band: int = DEFAULT_MIN_BAND,
    debug_dir: str | Path | None = None,
) -> np.ndarray:
    """Blended replacement for layer i; a linear function of the estimates."""
    s = obs.schedule
    if not 0 <= i <= s.N - 1:
        raise ValidationError(f"layer index {i} outside 0..{s.N - 1}")
    if i == 0:
        return np.array(obs.estimates[0], copy=True)
    pyrs = _observation_pyramids(obs, i, min_band)
    band_count = pyrs[0][1].band_count
    merged_bands = []
    for k in range(band_count + 1):  # index band_count is the residual
        members = [pyr for m, pyr in pyrs if contributes(s.p, i, m, k)]
        parts = [p.residual if k == band_count else p.bands[k] for p in members]
        merged_bands.append(sum(parts) / len(parts))
    if debug_dir is not None:
        _dump_contributions(pyrs, i, s.p, Path(debug_dir))
    merged = LaplacianPyramid(bands=tuple(merged_bands[:-1]), residual=merged_bands[-1])
    return recompose(merged)


def blend_stack(
    obs: ObservationSet,
    min_band: int = DEFAULT_MIN_BAND,
    debug_dir: str | Path | None = None,
) -> ZoomStack:
    """Multi-resolution blend of every layer; the sampler's consolidation step."""
    layers = np.stack(
        [blend_layer(obs, i, min_band, debug_dir) for i in range(obs.schedule.N)]
    )
    return ZoomStack(obs.schedule, layers)


def naive_blend(obs: ObservationSet) -> ZoomStack:
    """Baseline: pixel-average the upscaled central crops, no pyramids."""
    s = obs.schedule
    layers = []
    for i in range(s.N):
        parts = []
        for m in range(i + 1):
            f = s.p ** (i - m)
            crop = center_crop(obs.estimates[m], s.H // f, s.W // f)
            parts.append(upscale_bilinear(crop, f))
        layers.append(sum(parts) / len(parts))
    return ZoomStack(s, np.stack(layers))


def _dump_contributions(
    pyrs: list[tuple[int, LaplacianPyramid]], i: int, p: int, debug_dir: Path
) -> None:
    """Write each observation's per-band contribution as PNGs for inspection."""
    from .storage import save_png  # local import: storage pulls in PIL

    debug_dir.mkdir(parents=True, exist_ok=True)
    for m, pyr in pyrs:
        planes = list(pyr.bands) + [pyr.residual]
        for k, plane in enumerate(planes):
            if not contributes(p, i, m, k):
                continue
            peak = float(np.max(np.abs(plane)))
            scaled = plane / peak if peak > 0 else plane
            save_png(scaled, debug_dir / f"layer{i}_obs{m}_band{k}.png")
