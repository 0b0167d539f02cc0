"""Adam with bias correction and the step learning-rate schedule."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["AdamState", "init_adam", "adam_step", "lr_at_epoch"]


@dataclass
class AdamState:
    """Per-array first/second moments plus the shared step counter."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    base_lr: float = 1e-3


def init_adam(
    params: list[np.ndarray],
    base_lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
        raise InvalidArgument(f"betas must sit in [0, 1), got {beta1}, {beta2}")
    if base_lr <= 0 or epsilon <= 0:
        raise InvalidArgument("base_lr and epsilon must be positive")
    return AdamState(
        [np.zeros_like(p) for p in params],
        [np.zeros_like(p) for p in params],
        0,
        beta1,
        beta2,
        epsilon,
        base_lr,
    )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float | None = None,
) -> list[np.ndarray]:
    """One update, mutating params and state in place.

    update = -lr * m_hat / (sqrt(v_hat) + epsilon), with the epsilon outside
    the square root and both moments bias-corrected by the step count.
    """
    if len(params) != len(state.first_moment) or len(params) != len(grads):
        raise InvalidArgument("params/grads/state lengths differ")
    if lr is None:
        lr = state.base_lr
    state.step_count += 1
    c1 = 1.0 - state.beta1**state.step_count
    c2 = 1.0 - state.beta2**state.step_count
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise InvalidArgument(f"param shape {p.shape} vs grad shape {g.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params


def lr_at_epoch(base_lr: float, epoch: int) -> float:
    """Step schedule: divide by 10 every 30 epochs (epochs count from 0)."""
    if epoch < 0:
        raise InvalidArgument(f"epoch must be >= 0, got {epoch}")
    return base_lr * 10.0 ** (-(epoch // 30))
