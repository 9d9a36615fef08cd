"""Bit-exact denoiser wire protocol.

All integers are little-endian; tensors are float32 little-endian. One
session = handshake, then any number of pipelined request/response frames.

Handshake (12 bytes each way):
    client -> server:  "ZDNZ" | u32 version | u32 T (total step count)
    server -> client:  the same 12 bytes echoed

Request frame:
    u32 version | u64 request id | u32 level | u32 timestep |
    u8 conditional flag | u32 prompt byte length | prompt (UTF-8) |
    u32 H | u32 W | u32 C | H*W*C float32 z values

Response frame:
    u64 request id | u8 status |
      status == 0:  H*W*C float32 noise prediction (shape from the request)
      status != 0:  u32 message byte length | message (UTF-8)

The unconditional query is conditional flag 0 with an empty prompt.
Responses may arrive in any order; the id pairs them with requests.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ProtocolError

MAGIC = b"ZDNZ"
PROTOCOL_VERSION = 1

# Fail fast on garbage frames instead of trying to allocate absurd buffers.
MAX_PROMPT_BYTES = 1 << 20
MAX_DIM = 1 << 16
MAX_PIXELS = 1 << 28

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_U8 = struct.Struct("<B")


@dataclass(frozen=True)
class DenoiseRequest:
    request_id: int
    level: int
    timestep: int
    conditional: bool
    prompt: str
    z: np.ndarray = field(repr=False)  # (H, W, C) float32
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class DenoiseResponse:
    request_id: int
    status: int
    eps: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None


class FrameReader:
    """Exact-length reads over any recv(n)->bytes source (socket or pipe)."""

    def __init__(self, recv: Callable[[int], bytes]):
        self._recv = recv

    def read_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining:
            chunk = self._recv(remaining)
            if not chunk:
                raise ProtocolError(
                    f"stream ended mid-frame ({n - remaining} of {n} bytes read)"
                )
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def read_exact_or_eof(self, n: int) -> bytes | None:
        """Like read_exact, but a clean EOF before any byte returns None."""
        first = self._recv(n)
        if not first:
            return None
        if len(first) == n:
            return first
        return first + self.read_exact(n - len(first))


def encode_handshake(T: int, version: int = PROTOCOL_VERSION) -> bytes:
    return MAGIC + _U32.pack(version) + _U32.pack(T)


def decode_handshake(reader: FrameReader) -> tuple[int, int]:
    """Read a handshake; returns (version, T)."""
    blob = reader.read_exact_or_eof(12)
    if blob is None:
        raise ProtocolError("connection closed before handshake")
    if blob[:4] != MAGIC:
        raise ProtocolError(f"bad handshake magic {blob[:4]!r}")
    version = _U32.unpack_from(blob, 4)[0]
    total_steps = _U32.unpack_from(blob, 8)[0]
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    return version, total_steps


def encode_request(req: DenoiseRequest) -> bytes:
    z = np.ascontiguousarray(req.z, dtype="<f4")
    if z.ndim != 3:
        raise ProtocolError(f"request tensor must be (H, W, C), got shape {z.shape}")
    prompt = req.prompt.encode("utf-8")
    h, w, c = z.shape
    parts = [
        _U32.pack(req.version),
        _U64.pack(req.request_id),
        _U32.pack(req.level),
        _U32.pack(req.timestep),
        _U8.pack(1 if req.conditional else 0),
        _U32.pack(len(prompt)),
        prompt,
        _U32.pack(h),
        _U32.pack(w),
        _U32.pack(c),
        z.tobytes(),
    ]
    return b"".join(parts)


def read_request(reader: FrameReader) -> DenoiseRequest | None:
    """Parse one request frame; None on clean end-of-session."""
    head = reader.read_exact_or_eof(4)
    if head is None:
        return None
    version = _U32.unpack(head)[0]
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported request version {version}")
    request_id = _U64.unpack(reader.read_exact(8))[0]
    level = _U32.unpack(reader.read_exact(4))[0]
    timestep = _U32.unpack(reader.read_exact(4))[0]
    conditional = _U8.unpack(reader.read_exact(1))[0]
    prompt_len = _U32.unpack(reader.read_exact(4))[0]
    if prompt_len > MAX_PROMPT_BYTES:
        raise ProtocolError(f"implausible prompt length {prompt_len}")
    prompt = reader.read_exact(prompt_len).decode("utf-8")
    h = _U32.unpack(reader.read_exact(4))[0]
    w = _U32.unpack(reader.read_exact(4))[0]
    c = _U32.unpack(reader.read_exact(4))[0]
    if h > MAX_DIM or w > MAX_DIM or c > MAX_DIM or h * w * c > MAX_PIXELS:
        raise ProtocolError(f"implausible tensor dims {h}x{w}x{c}")
    payload = reader.read_exact(h * w * c * 4)
    z = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return DenoiseRequest(
        request_id=request_id,
        level=level,
        timestep=timestep,
        conditional=bool(conditional),
        prompt=prompt,
        z=z,
        version=version,
    )


def encode_response(resp: DenoiseResponse) -> bytes:
    parts = [_U64.pack(resp.request_id), _U8.pack(resp.status & 0xFF)]
    if resp.status == 0:
        eps = np.ascontiguousarray(resp.eps, dtype="<f4")
        parts.append(eps.tobytes())
    else:
        msg = (resp.error or "").encode("utf-8")
        parts.append(_U32.pack(len(msg)))
        parts.append(msg)
    return b"".join(parts)


def read_response(
    reader: FrameReader, shape_of: Callable[[int], tuple[int, int, int]]
) -> DenoiseResponse:
    """Parse one response; shape_of maps a request id to its tensor shape."""
    request_id = _U64.unpack(reader.read_exact(8))[0]
    status = _U8.unpack(reader.read_exact(1))[0]
    if status != 0:
        msg_len = _U32.unpack(reader.read_exact(4))[0]
        if msg_len > MAX_PROMPT_BYTES:
            raise ProtocolError(f"implausible error length {msg_len}")
        message = reader.read_exact(msg_len).decode("utf-8")
        return DenoiseResponse(request_id=request_id, status=status, error=message)
    shape = shape_of(request_id)
    if shape is None:
        raise ProtocolError(f"response for unknown request id {request_id}")
    h, w, c = shape
    payload = reader.read_exact(h * w * c * 4)
    eps = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return DenoiseResponse(request_id=request_id, status=0, eps=eps)
