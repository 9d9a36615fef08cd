"""Wire-protocol codec, implemented against the byte-level document
(docs/PROTOCOL.md in the engine repository).

Independent of the engine package on purpose: conformance of two separate
implementations against the recorded fixtures is part of the test story.

Layout summary (little-endian throughout, tensors float32):

    handshake   "ZDNZ" | u32 version | u32 T          (echoed verbatim)
    request     u32 version | u64 id | u32 level | u32 t | u8 cond |
                u32 prompt_len | prompt | u32 H | u32 W | u32 C | f32 z[]
    response    u64 id | u8 status | f32 eps[]            (status == 0)
                u64 id | u8 status | u32 len | message    (status != 0)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAGIC = b"ZDNZ"
VERSION = 1

MAX_PROMPT_BYTES = 1 << 20
MAX_DIM = 1 << 16
MAX_PIXELS = 1 << 28

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


class WireError(Exception):
    """Unrecoverable framing problem: the stream cannot be resynchronised."""


class FrameError(Exception):
    """A structurally complete but invalid frame; the stream stays usable."""

    def __init__(self, request_id: int, message: str):
        super().__init__(message)
        self.request_id = request_id


@dataclass(frozen=True)
class Request:
    request_id: int
    level: int
    timestep: int
    conditional: bool
    prompt: str
    z: np.ndarray = field(repr=False)


class StreamReader:
    """Exact-length reads over a recv(n)->bytes source."""

    def __init__(self, recv: Callable[[int], bytes]):
        self._recv = recv

    def exactly(self, n: int) -> bytes:
        parts = []
        need = n
        while need:
            chunk = self._recv(need)
            if not chunk:
                raise WireError(f"stream ended mid-frame ({n - need}/{n} bytes)")
            parts.append(chunk)
            need -= len(chunk)
        return b"".join(parts)

    def exactly_or_eof(self, n: int) -> bytes | None:
        head = self._recv(n)
        if not head:
            return None
        if len(head) == n:
            return head
        return head + self.exactly(n - len(head))


def handshake_bytes(total_steps: int, version: int = VERSION) -> bytes:
    return MAGIC + _U32.pack(version) + _U32.pack(total_steps)


def read_handshake(reader: StreamReader) -> tuple[int, int]:
    blob = reader.exactly_or_eof(12)
    if blob is None:
        raise WireError("connection closed before handshake")
    if blob[:4] != MAGIC:
        raise WireError(f"bad handshake magic {blob[:4]!r}")
    version = _U32.unpack_from(blob, 4)[0]
    if version != VERSION:
        raise WireError(f"unsupported protocol version {version}")
    return version, _U32.unpack_from(blob, 8)[0]


def read_request(reader: StreamReader) -> Request | None:
    """One request frame; None on clean end-of-session.

    Semantic problems inside a structurally complete frame raise FrameError
    carrying the request id, so the server can answer with a status != 0
    response and keep the connection alive.
    """
    head = reader.exactly_or_eof(4)
    if head is None:
        return None
    version = _U32.unpack(head)[0]
    if version != VERSION:
        raise WireError(f"unsupported request version {version}")
    request_id = _U64.unpack(reader.exactly(8))[0]
    level = _U32.unpack(reader.exactly(4))[0]
    timestep = _U32.unpack(reader.exactly(4))[0]
    conditional = reader.exactly(1)[0]
    prompt_len = _U32.unpack(reader.exactly(4))[0]
    if prompt_len > MAX_PROMPT_BYTES:
        raise WireError(f"implausible prompt length {prompt_len}")
    prompt_raw = reader.exactly(prompt_len)
    h = _U32.unpack(reader.exactly(4))[0]
    w = _U32.unpack(reader.exactly(4))[0]
    c = _U32.unpack(reader.exactly(4))[0]
    if h > MAX_DIM or w > MAX_DIM or c > MAX_DIM or h * w * c > MAX_PIXELS:
        raise WireError(f"implausible tensor dims {h}x{w}x{c}")
    payload = reader.exactly(h * w * c * 4)
    try:
        prompt = prompt_raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FrameError(request_id, f"prompt is not valid UTF-8: {exc}") from exc
    z = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    if not np.all(np.isfinite(z)):
        raise FrameError(request_id, "request tensor contains non-finite values")
    return Request(
        request_id=request_id,
        level=level,
        timestep=timestep,
        conditional=bool(conditional),
        prompt=prompt,
        z=z,
    )


def success_bytes(request_id: int, eps: np.ndarray) -> bytes:
    data = np.ascontiguousarray(eps, dtype="<f4").tobytes()
    return _U64.pack(request_id) + b"\x00" + data


def error_bytes(request_id: int, status: int, message: str) -> bytes:
    msg = message.encode("utf-8")
    return _U64.pack(request_id) + bytes([status & 0xFF or 1]) + _U32.pack(len(msg)) + msg
