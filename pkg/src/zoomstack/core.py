"""Zoom-stack representation and the exact multi-scale rendering operators.

A zoom stack is N constant-resolution layer images; layer i depicts the scene
at magnification p**i.  Rendering the stack at level i starts from layer i and
overlays every deeper layer j > i, downscaled by p**(j-i), onto the central
crop it corresponds to.  Because the downscale is defined as a cascade of
factor-p steps whose p x p blocks always align with the crop boundaries (the
schedule enforces this at construction), renders of adjacent levels agree
exactly on their overlapping central regions, up to float rounding.

Noise stacks are rendered the same way, but each cascade step rescales the
filtered output so the result stays unit variance ("exact" mode, the default)
or by the plain factor p ("paper" mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionError, ValidationError

# Downscale prefilter modes.
MODE_IMAGE = "image"
MODE_NOISE_EXACT = "noise-exact"
MODE_NOISE_PAPER = "noise-paper"

_NOISE_MODES = {"exact": MODE_NOISE_EXACT, "paper": MODE_NOISE_PAPER}


@lru_cache(maxsize=None)
def gaussian_kernel(p: int) -> np.ndarray:
    """p x p truncated-Gaussian prefilter, sigma = p/2, normalised to sum 1.

    Sampled at the p tap centres symmetric about 0; for p=2 the taps are
    equidistant from the centre, so the kernel degenerates to uniform 1/4.
    """
    if p < 2:
        raise ValidationError(f"downscale factor must be >= 2, got {p}")
    sigma = p / 2.0
    offsets = np.arange(p, dtype=np.float64) - (p - 1) / 2.0
    g1 = np.exp(-0.5 * (offsets / sigma) ** 2)
    k = np.outer(g1, g1)
    return k / k.sum()


@lru_cache(maxsize=None)
def _mode_scale(p: int, mode: str) -> float:
    """Per-cascade-step multiplier applied after the prefilter."""
    if mode == MODE_IMAGE:
        return 1.0
    if mode == MODE_NOISE_EXACT:
        # Unit-variance in -> unit-variance out: y = sum(w x) has var sum(w^2).
        return float(1.0 / np.sqrt(np.sum(gaussian_kernel(p) ** 2)))
    if mode == MODE_NOISE_PAPER:
        return float(p)
    raise ValidationError(f"unknown downscale mode {mode!r}")


def _require_image(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 3:
        raise DimensionError(f"expected (..., H, W, C) array, got shape {x.shape}")
    return x


def downscale_once(x: np.ndarray, p: int, mode: str = MODE_IMAGE, *, pad: bool = False) -> np.ndarray:
    """One prefiltered stride-p resampling step on (..., H, W, C) data.

    The kernel is applied on non-overlapping p x p blocks (kernel support ==
    stride, and p | H, W), so no boundary extension is ever needed.  With
    pad=True the (H/p, W/p) content is zero-padded back to H x W, centred.
    """
    x = _require_image(x)
    h, w = x.shape[-3], x.shape[-2]
    if h % p or w % p:
        raise DimensionError(f"image size {h}x{w} not divisible by {p}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite values in downscale input")
    k = gaussian_kernel(p)
    blocks = x.reshape(x.shape[:-3] + (h // p, p, w // p, p, x.shape[-1]))
    out = np.einsum("...iajbc,ab->...ijc", blocks, k) * _mode_scale(p, mode)
    if pad:
        out = _center_pad(out, h, w)
    return out


def downscale(x: np.ndarray, p: int, k: int, mode: str = MODE_IMAGE, *, pad: bool = True) -> np.ndarray:
    """Downscale by p**k as k composed factor-p steps; k=0 is the identity.

    The cascade definition (rather than one wide filter) is what makes
    adjacent-level renders agree exactly on their shared central region.
    """
    if k < 0:
        raise ValidationError(f"cascade depth must be >= 0, got {k}")
    x = _require_image(x)
    h, w = x.shape[-3], x.shape[-2]
    out = x
    for _ in range(k):
        out = downscale_once(out, p, mode)
    if pad and k > 0:
        out = _center_pad(out, h, w)
    elif k == 0:
        out = out.copy()
    return out


def downscale_adjoint(g: np.ndarray, p: int, k: int, mode: str = MODE_IMAGE) -> np.ndarray:
    """Adjoint of `downscale(.., pad=True)`: <D x, g> == <x, D^T g>.

    Crops the central content region out of the padded cotangent, then runs
    the transposed prefilter+stride k times (each output value spread back
    over its p x p block, weighted by the kernel).
    """
    if k < 0:
        raise ValidationError(f"cascade depth must be >= 0, got {k}")
    g = _require_image(g)
    if k == 0:
        return g.copy()
    h, w = g.shape[-3], g.shape[-2]
    ph, pw = p**k, p**k
    if h % ph or w % pw:
        raise DimensionError(f"image size {h}x{w} not divisible by {p}^{k}")
    y = _center_crop(g, h // ph, w // pw)
    kern = gaussian_kernel(p) * _mode_scale(p, mode)
    for _ in range(k):
        hh, ww = y.shape[-3], y.shape[-2]
        spread = np.einsum("...ijc,ab->...iajbc", y, kern)
        y = spread.reshape(y.shape[:-3] + (hh * p, ww * p, y.shape[-1]))
    return y


def _center_pad(content: np.ndarray, h: int, w: int) -> np.ndarray:
    ch, cw = content.shape[-3], content.shape[-2]
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    out = np.zeros(content.shape[:-3] + (h, w, content.shape[-1]), dtype=content.dtype)
    out[..., r0 : r0 + ch, c0 : c0 + cw, :] = content
    return out


def _center_crop(x: np.ndarray, ch: int, cw: int) -> np.ndarray:
    h, w = x.shape[-3], x.shape[-2]
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    return x[..., r0 : r0 + ch, c0 : c0 + cw, :]


def center_crop(x: np.ndarray, ch: int, cw: int) -> np.ndarray:
    """Central ch x cw crop of (..., H, W, C) data; margins must be integral."""
    x = _require_image(x)
    h, w = x.shape[-3], x.shape[-2]
    if ch > h or cw > w or (h - ch) % 2 or (w - cw) % 2:
        raise DimensionError(f"cannot centre a {ch}x{cw} crop in {h}x{w}")
    return _center_crop(x, ch, cw)


@dataclass(frozen=True)
class ZoomSchedule:
    """Geometry of a zoom stack: N levels at magnifications p**0 .. p**(N-1).

    Construction enforces everything the exact cross-level consistency of the
    renderer depends on:

    * every central crop H/p^k x W/p^k is integral (divisibility),
    * every crop can be centred with equal margins,
    * the margins of masks M_1 .. M_{N-2} are multiples of p, so the
      downscale's p x p blocks never straddle a composite boundary.
    """

    p: int
    N: int
    H: int
    W: int
    C: int = 3

    def __post_init__(self) -> None:
        if self.p < 2 or self.N < 1 or self.C < 1 or self.H < 1 or self.W < 1:
            raise ValidationError(
                f"invalid schedule: p={self.p}, N={self.N}, H={self.H}, W={self.W}, C={self.C}"
            )
        top = self.p ** (self.N - 1)
        if self.H % top or self.W % top:
            raise ValidationError(
                f"H={self.H}, W={self.W} must be divisible by p^(N-1)={top}"
            )
        for dim, name in ((self.H, "H"), (self.W, "W")):
            for k in range(1, self.N):
                margin2 = dim - dim // self.p**k
                if margin2 % 2:
                    raise ValidationError(
                        f"{name}={dim} cannot centre the level-{k} crop "
                        f"({name}/p^{k}={dim // self.p ** k}): odd margin"
                    )
                if k <= self.N - 2 and (margin2 // 2) % self.p:
                    raise ValidationError(
                        f"{name}={dim}: mask M_{k} margin {margin2 // 2} is not a "
                        f"multiple of p={self.p}; exact consistency would break"
                    )

    @property
    def zoom_factors(self) -> tuple[int, ...]:
        return tuple(self.p**i for i in range(self.N))

    def level_shape(self, k: int) -> tuple[int, int]:
        """Content size of the level-k central crop."""
        return self.H // self.p**k, self.W // self.p**k

    def layer_shape(self) -> tuple[int, int, int]:
        return (self.H, self.W, self.C)


@dataclass(frozen=True)
class CenterMask:
    """Binary indicator of the central H/p^k x W/p^k region, as (H, W, 1)."""

    level_offset: int
    array: np.ndarray = field(repr=False)


def center_mask(schedule: ZoomSchedule, k: int) -> CenterMask:
    """Mask M_k: 1 on the central level-k crop, 0 on the padded frame."""
    if not 0 <= k <= schedule.N - 1:
        raise ValidationError(f"mask level offset {k} outside 0..{schedule.N - 1}")
    h, w = schedule.level_shape(k)
    m = np.zeros((schedule.H, schedule.W, 1), dtype=np.float64)
    r0, c0 = (schedule.H - h) // 2, (schedule.W - w) // 2
    m[r0 : r0 + h, c0 : c0 + w, :] = 1.0
    return CenterMask(level_offset=k, array=m)


def _check_layers(schedule: ZoomSchedule, layers: np.ndarray, kind: str) -> np.ndarray:
    layers = np.asarray(layers, dtype=np.float64)
    expected = (schedule.N, schedule.H, schedule.W, schedule.C)
    if layers.shape != expected:
        raise DimensionError(f"{kind} layers shape {layers.shape} != {expected}")
    if not np.all(np.isfinite(layers)):
        raise ValidationError(f"non-finite values in {kind} layers")
    return layers


@dataclass(frozen=True)
class ZoomStack:
    """N layer images (N, H, W, C), values nominally in [-1, 1]."""

    schedule: ZoomSchedule
    layers: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", _check_layers(self.schedule, self.layers, "stack"))

    @classmethod
    def zeros(cls, schedule: ZoomSchedule) -> "ZoomStack":
        return cls(schedule, np.zeros((schedule.N, *schedule.layer_shape())))

    def render(self, i: int) -> np.ndarray:
        return render_image(self, i)


@dataclass(frozen=True)
class NoiseStack:
    """N independent unit-Gaussian images, consolidated at render time."""

    schedule: ZoomSchedule
    layers: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", _check_layers(self.schedule, self.layers, "noise"))

    @classmethod
    def sample(cls, schedule: ZoomSchedule, rng: np.random.Generator) -> "NoiseStack":
        return cls(schedule, rng.standard_normal((schedule.N, *schedule.layer_shape())))


def composite_levels(
    layers: np.ndarray, i: int, p: int, mode: str = MODE_IMAGE
) -> np.ndarray:
    """Functional core of rendering: layers is (N, ..., H, W, C).

    Starts from layer i and pastes the cascade-downscaled deeper layers onto
    nested central crops, innermost last.  Batch axes between the level axis
    and the image axes are carried through untouched.
    """
    n = layers.shape[0]
    if not 0 <= i < n:
        raise ValidationError(f"render level {i} outside 0..{n - 1}")
    x = np.array(layers[i], dtype=np.float64, copy=True)
    h, w = x.shape[-3], x.shape[-2]
    for j in range(i + 1, n):
        k = j - i
        content = downscale(layers[j], p, k, mode, pad=False)
        ch, cw = content.shape[-3], content.shape[-2]
        r0, c0 = (h - ch) // 2, (w - cw) // 2
        x[..., r0 : r0 + ch, c0 : c0 + cw, :] = content
    return x


def render_image(stack: ZoomStack, i: int) -> np.ndarray:
    """The image seen at zoom level p**i, consistent across levels."""
    return composite_levels(stack.layers, i, stack.schedule.p, MODE_IMAGE)


def render_noise(noise: NoiseStack, i: int, mode: str = "exact") -> np.ndarray:
    """Zoom-consistent noise at level i; unit variance in "exact" mode."""
    if mode not in _NOISE_MODES:
        raise ValidationError(f"noise mode must be one of {sorted(_NOISE_MODES)}, got {mode!r}")
    return composite_levels(noise.layers, i, noise.schedule.p, _NOISE_MODES[mode])
