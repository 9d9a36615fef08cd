"""Denoiser adapters served by the bridge.

Built-ins: "echo" (returns z, for loopback tests) and "oracle:<stack.zstk>"
(exact-target predictions against a stack file, assuming the engine's default
cosine schedule).  Real text-to-image pipelines plug in through adapt_model,
which wraps a pair of hooks (prompt embedding + noise prediction) and caches
embeddings per prompt string.

Every adapter result is validated for shape and finiteness before it is
serialised: the engine must never receive a malformed payload.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


class AdapterError(Exception):
    """Adapter-level failure, reported to the client as a nonzero status."""


class Adapter:
    """One denoiser: predict(z, timestep, prompt, conditional, level) -> eps."""

    name = "adapter"

    def start(self, total_steps: int) -> None:
        """Called once after the handshake with the client's step count."""

    def predict(
        self, z: np.ndarray, timestep: int, prompt: str, conditional: bool, level: int
    ) -> np.ndarray:
        raise NotImplementedError


class EchoAdapter(Adapter):
    """Returns the noisy input unchanged; the loopback test backend."""

    name = "echo"

    def predict(self, z, timestep, prompt, conditional, level):
        return z


def cosine_alpha_sigma(timestep: int, total_steps: int) -> tuple[float, float]:
    """The engine's default squared-cosine schedule at one timestep.

    alpha-bar is clipped to [1e-8, 1 - 1e-6], matching the engine, so the
    oracle formula stays finite at both ends.
    """
    s = 0.008
    f0 = math.cos(s / (1.0 + s) * math.pi / 2.0) ** 2
    u = timestep / total_steps
    alpha_bar = math.cos((u + s) / (1.0 + s) * math.pi / 2.0) ** 2 / f0
    alpha_bar = min(max(alpha_bar, 1e-8), 1.0 - 1e-6)
    return math.sqrt(alpha_bar), math.sqrt(1.0 - alpha_bar)


def load_zstk_layers(path: str | Path) -> np.ndarray:
    """Minimal reader for the engine's ZSTK stack container."""
    blob = Path(path).read_bytes()
    if len(blob) < 28 or blob[:4] != b"ZSTK":
        raise AdapterError(f"{path}: not a ZSTK file")
    version, n, h, w, c, p = struct.unpack_from("<IIIIII", blob, 4)
    if version != 1:
        raise AdapterError(f"{path}: unsupported ZSTK version {version}")
    if len(blob) != 28 + n * h * w * c * 4:
        raise AdapterError(f"{path}: truncated payload")
    data = np.frombuffer(blob, dtype="<f4", offset=28)
    return data.reshape(n, h, w, c).astype(np.float64)


class OracleAdapter(Adapter):
    """eps = (z - alpha_t * target_level) / sigma_t against a stack file."""

    name = "oracle"

    def __init__(self, stack_path: str | Path):
        self.targets = load_zstk_layers(stack_path)
        self.total_steps: int | None = None

    def start(self, total_steps: int) -> None:
        if total_steps < 1:
            raise AdapterError(f"handshake declared invalid step count {total_steps}")
        self.total_steps = total_steps

    def predict(self, z, timestep, prompt, conditional, level):
        if self.total_steps is None:
            raise AdapterError("oracle adapter used before handshake")
        if not 0 <= level < self.targets.shape[0]:
            raise AdapterError(f"no oracle target for level {level}")
        target = self.targets[level]
        if z.shape != target.shape:
            raise AdapterError(f"z shape {z.shape} != target shape {target.shape}")
        if not 0 <= timestep <= self.total_steps:
            raise AdapterError(f"timestep {timestep} outside 0..{self.total_steps}")
        alpha, sigma = cosine_alpha_sigma(timestep, self.total_steps)
        return (np.asarray(z, dtype=np.float64) - alpha * target) / sigma


@dataclass
class ModelHooks:
    """What a wrapped diffusion pipeline must provide.

    embed_prompt turns a prompt string (empty = unconditional) into whatever
    conditioning object predict_eps expects; it is called once per distinct
    prompt and cached.  predict_eps must return an array shaped like z.
    """

    predict_eps: Callable[[np.ndarray, int, object], np.ndarray]
    embed_prompt: Callable[[str], object] = lambda prompt: prompt


class ModelAdapter(Adapter):
    """Adapter over user hooks with a prompt-embedding cache."""

    name = "model"

    def __init__(self, hooks: ModelHooks, cache_size: int = 64):
        self.hooks = hooks
        self.cache_size = cache_size
        self._cache: dict[str, object] = {}
        self.cache_hits = 0
        self.cache_misses = 0

    def _embedding(self, prompt: str):
        if prompt in self._cache:
            self.cache_hits += 1
            return self._cache[prompt]
        self.cache_misses += 1
        emb = self.hooks.embed_prompt(prompt)
        if len(self._cache) >= self.cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[prompt] = emb
        return emb

    def predict(self, z, timestep, prompt, conditional, level):
        embedding = self._embedding(prompt if conditional else "")
        return self.hooks.predict_eps(np.asarray(z, dtype=np.float64), timestep, embedding)


def adapt_model(hooks: ModelHooks, cache_size: int = 64) -> ModelAdapter:
    """Register user hooks as a servable adapter."""
    return ModelAdapter(hooks, cache_size=cache_size)


def validated(adapter: Adapter, request_z: np.ndarray, eps) -> np.ndarray:
    """Enforce the contract on an adapter result before it goes on the wire."""
    eps = np.asarray(eps)
    if eps.shape != request_z.shape:
        raise AdapterError(
            f"{adapter.name} returned shape {eps.shape}, expected {request_z.shape}"
        )
    if not np.all(np.isfinite(eps)):
        raise AdapterError(f"{adapter.name} returned non-finite values")
    return eps


def make_adapter(spec: str) -> Adapter:
    """Build an adapter from its CLI spec: "echo" or "oracle:<stack.zstk>"."""
    if spec == "echo":
        return EchoAdapter()
    if spec.startswith("oracle:"):
        return OracleAdapter(spec[len("oracle:") :])
    raise AdapterError(f"unknown adapter {spec!r}")
