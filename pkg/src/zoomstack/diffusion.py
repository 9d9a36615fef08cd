"""Variance-preserving diffusion schedule and the DDPM sampling step.

The forward process is z_t = alpha_t * x + sigma_t * eps with
alpha_t^2 + sigma_t^2 = 1.  alpha-bar (= alpha_t^2) is clipped into
[1e-8, 1 - 1e-6] so that alpha stays strictly positive everywhere and
sigma_0 > 0: the sampling loop queries the denoiser down to t = 0, and both
the clean-image reconstruction (divide by alpha) and the analytic denoisers
(divide by sigma) must remain finite there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

ALPHA_BAR_MIN = 1e-8
ALPHA_BAR_MAX = 1.0 - 1e-6

SCHEDULE_KINDS = ("cosine", "linear")


@dataclass(frozen=True)
class NoiseSchedule:
    """(alpha_t, sigma_t) for t = 0..T, strictly decreasing alpha."""

    T: int
    alpha: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        a, s = np.asarray(self.alpha), np.asarray(self.sigma)
        if a.shape != (self.T + 1,) or s.shape != (self.T + 1,):
            raise ValidationError(f"schedule arrays must have length T+1={self.T + 1}")
        if np.max(np.abs(a**2 + s**2 - 1.0)) > 1e-9:
            raise ValidationError("alpha_t^2 + sigma_t^2 != 1")
        if not np.all(np.diff(a) < 0):
            raise ValidationError("alpha must be strictly decreasing in t")
        if a[0] < 0.999 or s[0] > 0.05 or s[-1] < 0.99:
            raise ValidationError(
                f"schedule endpoints out of spec: alpha_0={a[0]:.6f}, "
                f"sigma_0={s[0]:.6f}, sigma_T={s[-1]:.6f}"
            )


def make_schedule(T: int, kind: str = "cosine") -> NoiseSchedule:
    """Build a T-step schedule; "cosine" (squared-cosine, s=0.008) or "linear"
    (the continuous-limit beta-linear VP schedule)."""
    if T < 1:
        raise ValidationError(f"step count must be >= 1, got {T}")
    u = np.arange(T + 1, dtype=np.float64) / T
    if kind == "cosine":
        s = 0.008
        f = np.cos((u + s) / (1.0 + s) * math.pi / 2.0) ** 2
        alpha_bar = f / f[0]
    elif kind == "linear":
        beta_min, beta_max = 0.1, 20.0
        alpha_bar = np.exp(-(beta_min * u + 0.5 * (beta_max - beta_min) * u**2))
    else:
        raise ValidationError(f"unknown schedule kind {kind!r}; pick from {SCHEDULE_KINDS}")
    alpha_bar = np.clip(alpha_bar, ALPHA_BAR_MIN, ALPHA_BAR_MAX)
    alpha = np.sqrt(alpha_bar)
    sigma = np.sqrt(1.0 - alpha_bar)
    return NoiseSchedule(T=T, alpha=alpha, sigma=sigma)


def _check_step(t: int, sched: NoiseSchedule, lowest: int) -> None:
    if not lowest <= t <= sched.T:
        raise ValidationError(f"timestep {t} outside {lowest}..{sched.T}")


def _match(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shape {a.shape} != {b.shape}")


def cfg_combine(eps_cond: np.ndarray, eps_uncond: np.ndarray, omega: float) -> np.ndarray:
    """Classifier-free guidance: (1 + w) * conditional - w * unconditional."""
    eps_cond = np.asarray(eps_cond, dtype=np.float64)
    eps_uncond = np.asarray(eps_uncond, dtype=np.float64)
    _match(eps_cond, eps_uncond, "cfg_combine")
    return (1.0 + omega) * eps_cond - omega * eps_uncond


def predict_clean(
    z: np.ndarray, eps_hat: np.ndarray, t: int, sched: NoiseSchedule
) -> np.ndarray:
    """Estimated clean image (z - sigma_t * eps_hat) / alpha_t, clamped to [-1, 1]."""
    z = np.asarray(z, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    _match(z, eps_hat, "predict_clean")
    _check_step(t, sched, lowest=0)
    x = (z - sched.sigma[t] * eps_hat) / sched.alpha[t]
    return np.clip(x, -1.0, 1.0)


def ddpm_update(
    z_t: np.ndarray,
    x_hat: np.ndarray,
    eps_shared: np.ndarray,
    t: int,
    sched: NoiseSchedule,
) -> np.ndarray:
    """Ancestral DDPM step t -> t-1 in the x0 parameterisation.

    Returns mu + sigma-tilde_t * eps_shared, where mu is the forward-process
    posterior mean given (z_t, x_hat) and eps_shared is the caller-supplied
    (zoom-consistent) injection noise.  The final step t=1 is deterministic.
    """
    z_t = np.asarray(z_t, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    _match(z_t, x_hat, "ddpm_update")
    _check_step(t, sched, lowest=1)
    abar_t = sched.alpha[t] ** 2
    abar_prev = sched.alpha[t - 1] ** 2
    beta_t = 1.0 - abar_t / abar_prev
    coef_x = sched.alpha[t - 1] * beta_t / (1.0 - abar_t)
    coef_z = math.sqrt(abar_t / abar_prev) * (1.0 - abar_prev) / (1.0 - abar_t)
    mu = coef_x * x_hat + coef_z * z_t
    if t == 1:
        return mu
    eps_shared = np.asarray(eps_shared, dtype=np.float64)
    _match(z_t, eps_shared, "ddpm_update noise")
    var = beta_t * (1.0 - abar_prev) / (1.0 - abar_t)
    return mu + math.sqrt(var) * eps_shared
