"""Burt-Adelson Laplacian pyramids with exact reconstruction.

build_laplacian decomposes an image into difference bands band_k = G_k -
expand(G_{k+1}) over a 5-tap binomial Gaussian pyramid, plus the coarsest
low-pass residual.  recompose inverts the construction by replaying the same
expand, so build -> recompose is exact up to float rounding for any input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

DEFAULT_MIN_BAND = 4
_TAPS = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _blur_axis(x: np.ndarray, axis: int, gain: float = 1.0) -> np.ndarray:
    """5-tap binomial filter along one axis, reflect boundary."""
    pad = [(0, 0)] * x.ndim
    pad[axis] = (2, 2)
    xp = np.pad(x, pad, mode="reflect")
    out = np.zeros_like(x)
    n = x.shape[axis]
    for d, w in enumerate(_TAPS):
        sl = [slice(None)] * x.ndim
        sl[axis] = slice(d, d + n)
        out += w * xp[tuple(sl)]
    return out * gain


def _reduce(g: np.ndarray) -> np.ndarray:
    """Blur then subsample by 2 (even rows/cols)."""
    s = _blur_axis(_blur_axis(g, -3), -2)
    return s[..., ::2, ::2, :]


def _expand(g: np.ndarray) -> np.ndarray:
    """Zero-upsample by 2 then blur with doubled gain per axis."""
    h, w = g.shape[-3], g.shape[-2]
    up = np.zeros(g.shape[:-3] + (2 * h, 2 * w, g.shape[-1]), dtype=g.dtype)
    up[..., ::2, ::2, :] = g
    return _blur_axis(_blur_axis(up, -3, gain=2.0), -2, gain=2.0)


def _check_pyramid_dims(h: int, w: int, min_band: int) -> int:
    """Return the band count K; dims must be power-of-two multiples of min_band."""
    for dim, name in ((h, "H"), (w, "W")):
        q, r = divmod(dim, min_band)
        if r or q < 1 or q & (q - 1):
            raise DimensionError(
                f"{name}={dim} is not a power-of-two multiple of the "
                f"minimum band size {min_band}"
            )
    return int(np.log2(min(h, w) // min_band))


@dataclass(frozen=True)
class LaplacianPyramid:
    """Difference bands (finest first) plus the coarsest low-pass residual.

    Band k has shape (H/2^k, W/2^k, C); the residual sits at band index K and
    carries everything below the last difference band, including DC.
    """

    bands: tuple[np.ndarray, ...]
    residual: np.ndarray = field(repr=False)

    @property
    def band_count(self) -> int:
        return len(self.bands)


def build_laplacian(x: np.ndarray, min_band: int = DEFAULT_MIN_BAND) -> LaplacianPyramid:
    """Decompose (H, W, C) data down to a min_band-sized residual."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise DimensionError(f"expected (H, W, C) image, got shape {x.shape}")
    levels = _check_pyramid_dims(x.shape[0], x.shape[1], min_band)
    bands = []
    g = x
    for _ in range(levels):
        nxt = _reduce(g)
        bands.append(g - _expand(nxt))
        g = nxt
    return LaplacianPyramid(bands=tuple(bands), residual=g)


def recompose(pyr: LaplacianPyramid) -> np.ndarray:
    """Exact inverse of build_laplacian."""
    g = pyr.residual
    for band in reversed(pyr.bands):
        g = _expand(g)
        if g.shape != band.shape:
            raise DimensionError(
                f"band shape {band.shape} does not match expanded {g.shape}"
            )
        g = g + band
    return g
