"""The bridge server: handshake, then request -> adapter -> response.

Requests are handled by a small worker pool, so responses may leave in any
order; a write lock keeps each response frame atomic on the stream.  A
structurally complete but semantically bad frame (undecodable prompt,
non-finite payload, adapter fault) is answered with a nonzero status and the
connection stays usable; an unrecoverable framing error ends the session.
"""

from __future__ import annotations

import socket
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .adapters import Adapter, AdapterError, validated
from .protocol import (
    FrameError,
    Request,
    StreamReader,
    WireError,
    error_bytes,
    handshake_bytes,
    read_handshake,
    read_request,
    success_bytes,
)

STATUS_ADAPTER_ERROR = 1
STATUS_BAD_FRAME = 2


@dataclass(frozen=True)
class BackendConfig:
    """How to run the bridge: transport, adapter, sizing hints."""

    transport: str = "stdio"  # "stdio" or "tcp:<port>"
    adapter: str = "echo"
    device: str = "cpu"
    cache_size: int = 64

    def tcp_port(self) -> int | None:
        if self.transport == "stdio":
            return None
        if self.transport.startswith("tcp:"):
            return int(self.transport[4:])
        raise ValueError(f"transport must be 'stdio' or 'tcp:<port>', got {self.transport!r}")


def serve_session(adapter: Adapter, recv, send, max_workers: int = 4) -> None:
    """Run one protocol session until end-of-stream."""
    reader = StreamReader(recv)
    _, total_steps = read_handshake(reader)
    send(handshake_bytes(total_steps))
    adapter.start(total_steps)

    write_lock = threading.Lock()

    def reply(frame: bytes) -> None:
        with write_lock:
            send(frame)

    def handle(request: Request) -> None:
        try:
            eps = validated(adapter, request.z, adapter.predict(
                request.z, request.timestep, request.prompt,
                request.conditional, request.level,
            ))
        except AdapterError as exc:
            reply(error_bytes(request.request_id, STATUS_ADAPTER_ERROR, str(exc)))
            return
        except Exception as exc:  # noqa: BLE001 - adapter fault, not ours
            summary = f"{type(exc).__name__}: {exc}"
            reply(error_bytes(request.request_id, STATUS_ADAPTER_ERROR, summary))
            return
        reply(success_bytes(request.request_id, eps))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        while True:
            try:
                request = read_request(reader)
            except FrameError as exc:
                reply(error_bytes(exc.request_id, STATUS_BAD_FRAME, str(exc)))
                continue
            if request is None:
                return
            pool.submit(handle, request)


def serve_stdio(adapter: Adapter) -> None:
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer

    def send(frame: bytes) -> None:
        stdout.write(frame)
        stdout.flush()

    serve_session(adapter, stdin.read, send)


def serve_tcp(adapter_factory, port: int, ready_callback=None) -> None:
    """Accept connections forever; one adapter instance per connection."""
    listener = socket.create_server(("127.0.0.1", port))
    if ready_callback is not None:
        ready_callback(listener.getsockname()[1])
    with listener:
        while True:
            conn, _ = listener.accept()
            threading.Thread(
                target=_serve_conn, args=(adapter_factory(), conn), daemon=True
            ).start()


def _serve_conn(adapter: Adapter, conn: socket.socket) -> None:
    with conn:
        try:
            serve_session(adapter, conn.recv, conn.sendall)
        except WireError as exc:
            print(f"session ended: {exc}", file=sys.stderr)
        except OSError:
            pass
