"""Stack and image persistence.

Two formats:

* PNG, 8-bit, for individual layer/frame images.  Pixel values map linearly
  between [-1, 1] floats and [0, 255] bytes.
* ZSTK, a raw little-endian container for whole stacks:

      magic   4 bytes  "ZSTK"
      u32     version (currently 1)
      u32     N, H, W, C, p        (5 fields)
      f32[]   N*H*W*C values, level-major, row-major, channel-last

  All integers and floats are little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import ZoomSchedule, ZoomStack
from .errors import ValidationError

ZSTK_MAGIC = b"ZSTK"
ZSTK_VERSION = 1
_HEADER = struct.Struct("<4sIIIIII")


def image_to_bytes(img: np.ndarray) -> np.ndarray:
    """[-1, 1] float image -> uint8, rounding to nearest."""
    arr = np.asarray(img, dtype=np.float64)
    scaled = np.clip((arr + 1.0) * 0.5, 0.0, 1.0) * 255.0
    return np.rint(scaled).astype(np.uint8)


def bytes_to_image(arr: np.ndarray) -> np.ndarray:
    """uint8 -> [-1, 1] float image."""
    return np.asarray(arr, dtype=np.float64) / 255.0 * 2.0 - 1.0


def save_png(img: np.ndarray, path: str | Path) -> None:
    data = image_to_bytes(img)
    if data.ndim != 3:
        raise ValidationError(f"expected (H, W, C) image, got shape {data.shape}")
    if data.shape[-1] == 1:
        pil = Image.fromarray(data[..., 0], mode="L")
    elif data.shape[-1] == 3:
        pil = Image.fromarray(data, mode="RGB")
    else:
        raise ValidationError(f"cannot write {data.shape[-1]}-channel image as PNG")
    pil.save(Path(path), format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    """Load a PNG as (H, W, C) floats in [-1, 1]; greyscale keeps C=1."""
    with Image.open(Path(path)) as pil:
        if pil.mode not in ("L", "RGB"):
            pil = pil.convert("RGB")
        arr = np.asarray(pil)
    if arr.ndim == 2:
        arr = arr[..., None]
    return bytes_to_image(arr)


def save_stack(stack: ZoomStack, path: str | Path) -> None:
    s = stack.schedule
    header = _HEADER.pack(ZSTK_MAGIC, ZSTK_VERSION, s.N, s.H, s.W, s.C, s.p)
    payload = np.ascontiguousarray(stack.layers, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_stack(path: str | Path) -> ZoomStack:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ValidationError(f"{path}: truncated ZSTK header")
    magic, version, n, h, w, c, p = _HEADER.unpack_from(blob)
    if magic != ZSTK_MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}, not a ZSTK file")
    if version != ZSTK_VERSION:
        raise ValidationError(f"{path}: unsupported ZSTK version {version}")
    expected = n * h * w * c * 4
    if len(blob) != _HEADER.size + expected:
        raise ValidationError(
            f"{path}: payload is {len(blob) - _HEADER.size} bytes, expected {expected}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    layers = data.reshape(n, h, w, c).astype(np.float64)
    return ZoomStack(ZoomSchedule(p=p, N=n, H=h, W=w, C=c), layers)
