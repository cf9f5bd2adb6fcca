from __future__ import annotations

import math

import numpy as np

from ..nn import Adam, DenseNet, NonFiniteGradientError, Tensor, grad, parameter
from .tabular import greedy_action


class NeuralQAgent:
    """Q-network over one-hot states with a Polyak-averaged target copy."""

    def __init__(
        self,
        n_states: int,
        n_actions: int,
        hidden: tuple[int, ...] = (64, 64),
        gamma: float = 0.99,
        lr: float = 3e-4,
        tau: float = 0.005,
        rng: np.random.Generator | None = None,
    ):
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        self.n_states, self.n_actions = n_states, n_actions
        self.gamma, self.tau = gamma, tau
        self.online = DenseNet.create(n_states, n_actions, hidden, rng=rng)
        self.target = DenseNet(
            [parameter(w.data.copy()) for w in self.online.layer_weights],
            [parameter(b.data.copy()) for b in self.online.layer_biases],
            self.online.activation,
        )
        self.opt = Adam(self.online.parameters("q."), lr=lr)
        self.skipped_updates = 0

    def encode(self, states) -> np.ndarray:
        return np.eye(self.n_states)[np.asarray(states, dtype=np.int64)]

    def values(self, states) -> np.ndarray:
        return self.online.predict(self.encode(states))

    def act(self, state: int, epsilon: float, rng: np.random.Generator) -> int:
        if rng.random() < epsilon:
            return int(rng.integers(self.n_actions))
        return greedy_action(self.values([state])[0], rng)

    def greedy(self, state: int, rng: np.random.Generator | None = None) -> int:
        return greedy_action(self.values([state])[0], rng)

    def td_loss(self, states, actions, rewards, next_states, dones) -> Tensor:
        cont = 1.0 - np.asarray(dones, dtype=np.float64)
        bootstrap = self.target.predict(self.encode(next_states)).max(axis=1)
        targets = np.asarray(rewards, dtype=np.float64) + self.gamma * cont * bootstrap
        q = self.online(self.encode(states))
        chosen = q[np.arange(len(targets)), np.asarray(actions, dtype=np.int64)]
        residual = chosen - targets
        return (residual * residual).mean()

    def soft_update(self) -> None:
        for tgt, src in zip(
            self.target.layer_weights + self.target.layer_biases,
            self.online.layer_weights + self.online.layer_biases,
        ):
            tgt.data = (1.0 - self.tau) * tgt.data + self.tau * src.data

    def update(self, states, actions, rewards, next_states, dones) -> float:
        return dqn_update(self, states, actions, rewards, next_states, dones)


def dqn_update(agent: NeuralQAgent, states, actions, rewards, next_states, dones) -> float:
    """One Adam step on the squared TD error, then a target smoothing step.
    A non-finite loss or gradient skips the step and returns NaN."""
    loss = agent.td_loss(states, actions, rewards, next_states, dones)
    value = loss.item()
    if not math.isfinite(value):
        agent.skipped_updates += 1
        return math.nan
    try:
        agent.opt.step(grad(loss, agent.opt.params))
    except NonFiniteGradientError:
        agent.skipped_updates += 1
        return math.nan
    agent.soft_update()
    return value
