"""Continuous-zoom frame rendering from a finished stack.

A frame at zoom factor z in [1, p^(N-1)] is the render of the deepest level
i with p^i <= z, magnified about its centre by the fractional remainder
z / p^i and cropped back to H x W.  Cross-level consistency makes the level
hand-off continuous: just before the switch, the magnified coarse render
matches the next level's content in everything but the frequencies the
prefilter removed.

Exported sequences space z geometrically (constant zoom rate per frame) and
come with a manifest listing the zoom of every file.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .core import ZoomStack, render_image
from .errors import ValidationError
from .storage import save_png

_EPS = 1e-9


def render_frame(stack: ZoomStack, z: float) -> np.ndarray:
    """Render the view at continuous zoom factor z."""
    s = stack.schedule
    z_max = float(s.p ** (s.N - 1))
    if not 1.0 - _EPS <= z <= z_max * (1.0 + _EPS):
        raise ValidationError(f"zoom {z} outside [1, {z_max}]")
    z = min(max(z, 1.0), z_max)
    level = min(s.N - 1, int(math.floor(math.log(z) / math.log(s.p) + _EPS)))
    scale = max(z / s.p**level, 1.0)
    base = render_image(stack, level)
    if scale == 1.0:
        return base
    return _magnify_center(base, scale)


def _magnify_center(img: np.ndarray, scale: float) -> np.ndarray:
    """Bilinear magnification about the image centre, same output size."""
    out = img
    for axis in (-3, -2):
        out = _magnify_axis(out, scale, axis)
    return out


def _magnify_axis(x: np.ndarray, scale: float, axis: int) -> np.ndarray:
    n = x.shape[axis]
    centre = (n - 1) / 2.0
    pos = (np.arange(n, dtype=np.float64) - centre) / scale + centre
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    left = np.take(x, np.clip(lo, 0, n - 1), axis=axis)
    right = np.take(x, np.clip(lo + 1, 0, n - 1), axis=axis)
    shape = [1] * x.ndim
    shape[axis] = n
    w = frac.reshape(shape)
    return left * (1.0 - w) + right * w


def zoom_values(stack: ZoomStack, frame_count: int) -> list[float]:
    """Geometrically spaced zooms from 1 to p^(N-1), inclusive."""
    if frame_count < 2:
        raise ValidationError(f"frame count must be >= 2, got {frame_count}")
    s = stack.schedule
    top_exp = s.N - 1
    return [
        float(s.p ** (top_exp * k / (frame_count - 1))) for k in range(frame_count)
    ]


def export_sequence(
    stack: ZoomStack,
    frame_count: int,
    out_dir: str | Path,
    easing: str = "linear-in-log-zoom",
) -> list[tuple[str, float]]:
    """Write numbered frame PNGs plus a manifest; returns (filename, z) pairs."""
    if easing != "linear-in-log-zoom":
        raise ValidationError(f"unknown easing {easing!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, z in enumerate(zoom_values(stack, frame_count)):
        name = f"frame_{k:04d}.png"
        save_png(render_frame(stack, z), out_dir / name)
        entries.append((name, z))
    manifest = "".join(f"{name} {z!r}\n" for name, z in entries)
    (out_dir / "manifest.txt").write_text(manifest, encoding="utf-8")
    return entries
