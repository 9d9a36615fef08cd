"""Denoiser contract and the built-in analytic verification backends.

A denoiser maps (z_t, t, prompt, level) to a noise prediction of the same
shape.  prompt=None is the reserved unconditional query.  The two built-ins
are exact constructions used to verify the sampling machinery:

* OracleDenoiser returns the eps that makes predict_clean recover a fixed
  per-level target image exactly, at every (z, t).
* GaussianDenoiser is the closed-form posterior for data x ~ N(mu, s^2 I)
  under the variance-preserving forward process, so N=1 sampling against it
  must reproduce that distribution's moments.
"""

from __future__ import annotations

import numpy as np

from .diffusion import NoiseSchedule
from .errors import BackendError, DimensionError, ValidationError

UNCOND = None  # reserved unconditional prompt identifier


class Denoiser:
    """Behavioural contract: shape-preserving, finite, deterministic output."""

    deterministic = True

    def predict_noise(
        self, z: np.ndarray, t: int, prompt: str | None, level: int
    ) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        """Release any backend resources; no-op for in-process denoisers."""


class OracleDenoiser(Denoiser):
    """Returns eps = (z - alpha_t * target_level) / sigma_t.

    predict_clean then reconstructs the target exactly, making end-to-end
    sampling runs comparable against a known ground truth.
    """

    def __init__(self, targets: np.ndarray, schedule: NoiseSchedule):
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim != 4:
            raise DimensionError(f"targets must be (N, H, W, C), got {targets.shape}")
        self.targets = targets
        self.schedule = schedule

    def predict_noise(self, z, t, prompt, level):
        if not 0 <= level < self.targets.shape[0]:
            raise ValidationError(f"oracle has no target for level {level}")
        z = np.asarray(z, dtype=np.float64)
        target = self.targets[level]
        if z.shape != target.shape:
            raise DimensionError(f"z shape {z.shape} != target shape {target.shape}")
        a, s = self.schedule.alpha[t], self.schedule.sigma[t]
        return (z - a * target) / s


class GaussianDenoiser(Denoiser):
    """Exact posterior-mean denoiser for x ~ N(mu, std^2 I).

    E[x | z_t] = (alpha_t std^2 z + sigma_t^2 mu) / (alpha_t^2 std^2 + sigma_t^2),
    returned in eps form: (z - alpha_t E[x|z]) / sigma_t.
    """

    def __init__(self, mu: np.ndarray, std: float, schedule: NoiseSchedule):
        if std <= 0:
            raise ValidationError(f"std must be positive, got {std}")
        self.mu = np.asarray(mu, dtype=np.float64)
        self.std = float(std)
        self.schedule = schedule

    def posterior_mean(self, z: np.ndarray, t: int) -> np.ndarray:
        a, s = self.schedule.alpha[t], self.schedule.sigma[t]
        v = self.std**2
        return (a * v * z + s**2 * self.mu) / (a**2 * v + s**2)

    def predict_noise(self, z, t, prompt, level):
        z = np.asarray(z, dtype=np.float64)
        if z.shape != self.mu.shape:
            raise DimensionError(f"z shape {z.shape} != mu shape {self.mu.shape}")
        a, s = self.schedule.alpha[t], self.schedule.sigma[t]
        return (z - a * self.posterior_mean(z, t)) / s


class LevelShiftDenoiser(Denoiser):
    """Presents an inner denoiser under remapped level indices.

    Used by independent-mode sampling, where each level runs as its own N=1
    chain (local level 0) but must still query the backend at its true level.
    """

    def __init__(self, inner: Denoiser, mapping: dict[int, int]):
        self.inner = inner
        self.mapping = dict(mapping)
        self.deterministic = inner.deterministic

    def predict_noise(self, z, t, prompt, level):
        return self.inner.predict_noise(z, t, prompt, self.mapping[level])


def query(denoiser: Denoiser, z: np.ndarray, t: int, prompt: str | None, level: int) -> np.ndarray:
    """Query a backend and enforce the contract (shape, finiteness)."""
    try:
        eps = denoiser.predict_noise(z, t, prompt, level)
    except BackendError:
        raise
    except Exception as exc:  # noqa: BLE001 - backend faults become BackendError
        raise BackendError(f"denoiser failed at t={t}, level={level}: {exc}") from exc
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != np.shape(z):
        raise BackendError(
            f"denoiser returned shape {eps.shape}, expected {np.shape(z)} "
            f"(t={t}, level={level})"
        )
    if not np.all(np.isfinite(eps)):
        raise BackendError(f"denoiser returned non-finite values (t={t}, level={level})")
    return eps
