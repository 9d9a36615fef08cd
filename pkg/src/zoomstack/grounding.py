"""Grounding the sampled stack to a real photograph.

The most zoomed-out view is pinned to a target image xi by minimising

    sum_i || D_i(x-hat_i) - M_i * xi ||^2

over the per-level clean-image estimates, where D_i is the zero-padded
level-i downscale and M_i its centre mask.  The objective is a decoupled
convex quadratic per level; its gradient is 2 D_i^T(D_i x - M_i xi).  A few
Adam steps are applied before every blending operation, with moments reset
each sampling step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blending import ObservationSet
from .core import center_crop, downscale, downscale_adjoint
from .errors import DimensionError, InvariantViolation, ValidationError


@dataclass(frozen=True)
class GroundingConfig:
    """Target image and optimiser settings (5 steps at lr 0.1 by default)."""

    target: np.ndarray = field(repr=False)
    steps: int = 5
    learning_rate: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValidationError(f"grounding steps must be >= 0, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning rate must be > 0, got {self.learning_rate}")
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))


@dataclass
class AdamState:
    """First/second-moment accumulators over the stacked estimates."""

    m: np.ndarray
    v: np.ndarray
    count: int = 0

    @classmethod
    def zeros(cls, shape: tuple[int, ...]) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), count=0)


def _check_target(obs: ObservationSet, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != obs.schedule.layer_shape():
        raise DimensionError(
            f"target shape {xi.shape} != layer shape {obs.schedule.layer_shape()}"
        )
    return xi


def grounding_loss(obs: ObservationSet, xi: np.ndarray) -> float:
    """Sum over levels of the squared residual; no normalisation."""
    s = obs.schedule
    xi = _check_target(obs, xi)
    total = 0.0
    for i in range(s.N):
        down = downscale(obs.estimates[i], s.p, i, pad=False)
        ref = center_crop(xi, *s.level_shape(i))
        total += float(np.sum((down - ref) ** 2))
    return total


def grounding_grad(obs: ObservationSet, xi: np.ndarray) -> np.ndarray:
    """d loss / d x-hat_i = 2 D_i^T(D_i(x-hat_i) - M_i xi), stacked (N, H, W, C)."""
    s = obs.schedule
    xi = _check_target(obs, xi)
    grads = []
    for i in range(s.N):
        residual = downscale(obs.estimates[i], s.p, i, pad=True)
        h, w = s.level_shape(i)
        r0, c0 = (s.H - h) // 2, (s.W - w) // 2
        residual[r0 : r0 + h, c0 : c0 + w, :] -= xi[r0 : r0 + h, c0 : c0 + w, :]
        grads.append(2.0 * downscale_adjoint(residual, s.p, i))
    return np.stack(grads)


def apply_grounding(
    obs: ObservationSet,
    config: GroundingConfig,
    state: AdamState | None = None,
) -> tuple[ObservationSet, AdamState, list[float]]:
    """Run config.steps Adam iterations on the estimates, clamped to [-1, 1].

    Returns the updated set, the optimiser state, and the loss trajectory
    (length steps + 1: before the first step and after each one).
    """
    xi = _check_target(obs, config.target)
    x = np.array(obs.estimates, copy=True)
    if state is None:
        state = AdamState.zeros(x.shape)
    losses = [grounding_loss(obs, xi)]
    if not np.isfinite(losses[0]):
        raise InvariantViolation("grounding loss non-finite before optimisation")
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    for _ in range(config.steps):
        grad = grounding_grad(ObservationSet(obs.schedule, x), xi)
        state.count += 1
        state.m = b1 * state.m + (1.0 - b1) * grad
        state.v = b2 * state.v + (1.0 - b2) * grad**2
        m_hat = state.m / (1.0 - b1**state.count)
        v_hat = state.v / (1.0 - b2**state.count)
        x = x - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        loss = grounding_loss(ObservationSet(obs.schedule, x), xi)
        if not np.isfinite(loss):
            raise InvariantViolation(f"grounding loss non-finite at step {state.count}")
        losses.append(loss)
    if config.steps > 0:
        x = np.clip(x, -1.0, 1.0)
    return ObservationSet(obs.schedule, x), state, losses
