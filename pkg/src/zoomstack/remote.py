"""Client for external denoiser backends speaking the wire protocol.

Transports: a TCP address ("remote:HOST:PORT") or a spawned subprocess
exchanging frames over stdio ("subprocess:CMD ...").  Requests are pipelined:
any number may be in flight, a background reader matches responses to waiting
callers by request id, so the client is safe for concurrent use.
"""

from __future__ import annotations

import shlex
import socket
import subprocess
import threading

import numpy as np

from .denoisers import Denoiser
from .errors import BackendError, ProtocolError, ValidationError
from .protocol import (
    DenoiseRequest,
    FrameReader,
    decode_handshake,
    encode_handshake,
    encode_request,
    read_response,
)

DEFAULT_TIMEOUT = 300.0


class Transport:
    """Byte pipe to a backend: write(bytes), recv(n), close()."""

    def write(self, data: bytes) -> None:
        raise NotImplementedError

    def recv(self, n: int) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class SocketTransport(Transport):
    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))

    def write(self, data: bytes) -> None:
        self._sock.sendall(data)

    def recv(self, n: int) -> bytes:
        try:
            return self._sock.recv(n)
        except OSError:
            return b""

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class ProcessTransport(Transport):
    def __init__(self, argv: list[str]):
        self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)

    def write(self, data: bytes) -> None:
        self._proc.stdin.write(data)
        self._proc.stdin.flush()

    def recv(self, n: int) -> bytes:
        return self._proc.stdout.read(n)

    def close(self) -> None:
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


def open_transport(endpoint: str) -> Transport:
    """Parse "remote:HOST:PORT" or "subprocess:CMD ..." into a live transport."""
    if endpoint.startswith("remote:"):
        addr = endpoint[len("remote:") :]
        host, sep, port = addr.rpartition(":")
        if not sep or not host:
            raise ValidationError(f"remote endpoint must be remote:HOST:PORT, got {endpoint!r}")
        try:
            return SocketTransport(host, int(port))
        except (OSError, ValueError) as exc:
            raise BackendError(f"cannot connect to {addr}: {exc}") from exc
    if endpoint.startswith("subprocess:"):
        cmd = endpoint[len("subprocess:") :]
        argv = shlex.split(cmd)
        if not argv:
            raise ValidationError("subprocess endpoint is missing a command")
        try:
            return ProcessTransport(argv)
        except OSError as exc:
            raise BackendError(f"cannot spawn {cmd!r}: {exc}") from exc
    raise ValidationError(f"unknown endpoint {endpoint!r}; use remote:... or subprocess:...")


class _Pending:
    __slots__ = ("shape", "event", "response", "failure")

    def __init__(self, shape: tuple[int, int, int]):
        self.shape = shape
        self.event = threading.Event()
        self.response = None
        self.failure: Exception | None = None


class RemoteDenoiser(Denoiser):
    """Denoiser backed by a wire-protocol peer."""

    def __init__(self, transport: Transport, total_steps: int, timeout: float = DEFAULT_TIMEOUT):
        self._transport = transport
        self._timeout = timeout
        self._reader = FrameReader(transport.recv)
        self._write_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._pending: dict[int, _Pending] = {}
        self._next_id = 0
        self._dead: Exception | None = None
        self._handshake(total_steps)
        self._thread = threading.Thread(target=self._read_loop, daemon=True)
        self._thread.start()

    def _handshake(self, total_steps: int) -> None:
        self._transport.write(encode_handshake(total_steps))
        _, echoed_steps = decode_handshake(self._reader)
        if echoed_steps != total_steps:
            raise ProtocolError(
                f"handshake echo mismatch: sent T={total_steps}, got T={echoed_steps}"
            )

    def _read_loop(self) -> None:
        def shape_of(request_id: int):
            with self._state_lock:
                entry = self._pending.get(request_id)
            return entry.shape if entry else None

        try:
            while True:
                resp = read_response(self._reader, shape_of)
                with self._state_lock:
                    entry = self._pending.pop(resp.request_id, None)
                if entry is None:
                    raise ProtocolError(f"response for unknown request id {resp.request_id}")
                entry.response = resp
                entry.event.set()
        except Exception as exc:  # noqa: BLE001 - propagate to all waiters
            with self._state_lock:
                self._dead = exc
                pending = list(self._pending.values())
                self._pending.clear()
            for entry in pending:
                entry.failure = exc
                entry.event.set()

    def predict_noise(self, z, t, prompt, level):
        z32 = np.ascontiguousarray(np.asarray(z), dtype="<f4")
        with self._state_lock:
            if self._dead is not None:
                raise BackendError(f"backend connection lost: {self._dead}")
            request_id = self._next_id
            self._next_id += 1
            entry = _Pending(shape=z32.shape)
            self._pending[request_id] = entry
        frame = encode_request(
            DenoiseRequest(
                request_id=request_id,
                level=level,
                timestep=t,
                conditional=prompt is not None,
                prompt=prompt or "",
                z=z32,
            )
        )
        try:
            with self._write_lock:
                self._transport.write(frame)
        except Exception as exc:
            with self._state_lock:
                self._pending.pop(request_id, None)
            raise BackendError(f"failed to send request: {exc}") from exc
        if not entry.event.wait(self._timeout):
            with self._state_lock:
                self._pending.pop(request_id, None)
            raise BackendError(f"backend timed out after {self._timeout}s (t={t}, level={level})")
        if entry.failure is not None:
            raise BackendError(f"backend connection failed: {entry.failure}") from entry.failure
        resp = entry.response
        if resp.status != 0:
            raise BackendError(f"backend error (status {resp.status}): {resp.error}")
        return np.asarray(resp.eps, dtype=np.float64)

    def close(self) -> None:
        self._transport.close()
        self._thread.join(timeout=5)


def handshake_check(endpoint: str, total_steps: int = 8) -> int:
    """Open a connection, perform the handshake, close; returns the version."""
    transport = open_transport(endpoint)
    try:
        reader = FrameReader(transport.recv)
        transport.write(encode_handshake(total_steps))
        version, echoed = decode_handshake(reader)
        if echoed != total_steps:
            raise ProtocolError(f"handshake echo mismatch: sent T={total_steps}, got {echoed}")
        return version
    finally:
        transport.close()
