from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class OptimizerState:
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


def adam_step(
    state: OptimizerState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One bias-corrected Adam update; returns new arrays and mutates ``state``.

    Nothing is touched when any gradient entry is non-finite.
    """
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {k} has shape {g.shape}, parameter has {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient for {k}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    out = {}
    for k, p in params.items():
        g = grads[k]
        m = state.first_moment.get(k)
        if m is None:
            m = np.zeros_like(p)
            state.second_moment[k] = np.zeros_like(p)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * state.second_moment[k] + (1.0 - b2) * g * g
        state.first_moment[k], state.second_moment[k] = m, v
        out[k] = p - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return out, state


class Adam:
    """Adam bound to a dict of parameter tensors, updated in place."""

    def __init__(self, params: dict[str, Tensor], lr: float = 3e-4, **kwargs):
        self.params = params
        self.state = OptimizerState(learning_rate=lr, **kwargs)

    def step(self, grads: dict[str, np.ndarray] | None = None) -> None:
        if grads is None:
            grads = {
                k: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for k, p in self.params.items()
            }
        new, _ = adam_step(self.state, {k: p.data for k, p in self.params.items()}, grads)
        for k, p in self.params.items():
            p.data = new[k]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
