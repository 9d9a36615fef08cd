"""Reference external denoiser backend for the zoomstack wire protocol."""

from .adapters import (
    Adapter,
    AdapterError,
    EchoAdapter,
    ModelAdapter,
    ModelHooks,
    OracleAdapter,
    adapt_model,
    make_adapter,
)
from .server import BackendConfig, serve_session, serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = [
    "Adapter",
    "AdapterError",
    "BackendConfig",
    "EchoAdapter",
    "ModelAdapter",
    "ModelHooks",
    "OracleAdapter",
    "adapt_model",
    "make_adapter",
    "serve_session",
    "serve_stdio",
    "serve_tcp",
]
