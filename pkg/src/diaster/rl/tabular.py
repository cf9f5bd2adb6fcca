from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def greedy_action(values: np.ndarray, rng: np.random.Generator | None = None) -> int:
    """Argmax of a row; ties broken uniformly when ``rng`` is given, else lowest index."""
    best = np.flatnonzero(values == values.max())
    if rng is None or len(best) == 1:
        return int(best[0])
    return int(rng.choice(best))


@dataclass
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over the first ``fraction`` of episodes."""

    n_episodes: int
    start: float = 1.0
    end: float = 0.05
    fraction: float = 0.2

    def __call__(self, episode: int) -> float:
        span = max(1.0, self.fraction * self.n_episodes)
        frac = min(1.0, episode / span)
        return self.start + frac * (self.end - self.start)


@dataclass
class QTable:
    n_states: int
    n_actions: int
    lr: float = 0.1
    gamma: float = 0.99
    q: np.ndarray = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.q is None:
            self.q = np.zeros((self.n_states, self.n_actions))

    def act(self, state: int, epsilon: float, rng: np.random.Generator) -> int:
        if rng.random() < epsilon:
            return int(rng.integers(self.n_actions))
        return greedy_action(self.q[state], rng)

    def greedy(self, state: int, rng: np.random.Generator | None = None) -> int:
        return greedy_action(self.q[state], rng)

    def update(self, states, actions, rewards, next_states, dones) -> float:
        """One bootstrapped step on a batch. Targets use the table before the
        update; duplicate (s, a) pairs move toward their mean target."""
        states = np.asarray(states, dtype=np.int64)
        actions = np.asarray(actions, dtype=np.int64)
        cont = 1.0 - np.asarray(dones, dtype=np.float64)
        targets = np.asarray(rewards, dtype=np.float64) + self.gamma * cont * self.q[next_states].max(axis=1)
        td = targets - self.q[states, actions]
        flat = states * self.n_actions + actions
        sums = np.bincount(flat, weights=td, minlength=self.q.size)
        counts = np.bincount(flat, minlength=self.q.size)
        hit = counts > 0
        self.q.reshape(-1)[hit] += self.lr * sums[hit] / counts[hit]
        return float(np.mean(td * td))


def q_update(qt: QTable, s: int, a: int, r: float, s_next: int, done: bool) -> None:
    """Single-transition update toward r + gamma * max_a' Q(s', a') * (1 - done)."""
    qt.update([s], [a], [r], [s_next], [done])
