"""Reward models over (state, action) sequences.

Sequences arrive as padded integer arrays: ``states`` and ``actions`` of shape
(N, L) with a ``lengths`` vector; entries past a row's length are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..nn import DenseNet, GruCell, Tensor, concat, gru_sequence, parameter


class PrefixScorer(Protocol):
    def prefix_values(self, states: np.ndarray, actions: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        """Scores of every prefix: column k holds the score of the first k
        pairs (column 0 is the empty prefix, always 0). Shape (N, L+1)."""


def one_hot_pairs(
    states: np.ndarray, actions: np.ndarray, n_states: int, n_actions: int, state_only: bool = False
) -> np.ndarray:
    """One-hot state concatenated with one-hot action; padding (-1) maps to zeros."""
    states = np.asarray(states)
    actions = np.asarray(actions)
    width = n_states + (0 if state_only else n_actions)
    out = np.zeros(states.shape + (width,))
    idx = np.nonzero(states >= 0)
    out[idx + (states[idx],)] = 1.0
    if not state_only:
        idx = np.nonzero(actions >= 0)
        out[idx + (n_states + actions[idx],)] = 1.0
    return out


def valid_mask(lengths: np.ndarray, width: int) -> np.ndarray:
    return np.arange(width)[None, :] < np.asarray(lengths)[:, None]


@dataclass
class SubTrajRewardModel:
    """GRU over a segment's (s, a) encodings with a linear read-out of the
    final hidden state. The empty segment scores exactly 0."""

    cell: GruCell
    head_w: Tensor
    head_b: Tensor
    n_states: int
    n_actions: int
    state_only: bool = False

    @classmethod
    def create(
        cls,
        n_states: int,
        n_actions: int,
        hidden_dim: int = 64,
        rng: np.random.Generator | None = None,
        state_only: bool = False,
    ) -> "SubTrajRewardModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        d = n_states + (0 if state_only else n_actions)
        cell = GruCell.create(d, hidden_dim, rng)
        bound = 1.0 / np.sqrt(hidden_dim)
        head_w = parameter(rng.uniform(-bound, bound, (hidden_dim, 1)), "head_w")
        head_b = parameter(np.zeros(1), "head_b")
        return cls(cell, head_w, head_b, n_states, n_actions, state_only)

    @property
    def hidden_dim(self) -> int:
        return self.cell.hidden_dim

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return {**self.cell.parameters(prefix), f"{prefix}head_w": self.head_w, f"{prefix}head_b": self.head_b}

    def _hidden(self, states, actions, lengths) -> tuple[Tensor, np.ndarray]:
        states, actions = np.asarray(states), np.asarray(actions)
        mask = valid_mask(lengths, states.shape[1])
        x = one_hot_pairs(states, actions, self.n_states, self.n_actions, self.state_only)
        return gru_sequence(self.cell, x, mask), mask

    def segment_scores(self, states, actions, lengths) -> Tensor:
        """Score of each padded row as one standalone segment, shape (N,)."""
        lengths = np.asarray(lengths)
        if states.shape[1] == 0:
            return Tensor(np.zeros(len(lengths)))
        hs, _ = self._hidden(states, actions, lengths)
        out = (hs[:, -1, :] @ self.head_w).reshape(-1) + self.head_b
        # the empty segment bypasses the network
        return out * (lengths > 0).astype(float)

    def prefix_scores(self, states, actions, lengths) -> Tensor:
        """Differentiable prefix scores, shape (N, L+1), column 0 equal to 0.
        Columns past a row's length repeat its full-length score."""
        lengths = np.asarray(lengths)
        N, L = np.shape(states)
        if L == 0:
            return Tensor(np.zeros((N, 1)))
        hs, _ = self._hidden(states, actions, lengths)
        ro = (hs @ self.head_w).reshape(N, L) + self.head_b
        ro = ro * (lengths > 0).astype(float)[:, None]
        return concat([Tensor(np.zeros((N, 1))), ro], axis=1)

    def prefix_values(self, states, actions, lengths) -> np.ndarray:
        return self.prefix_scores(states, actions, lengths).data

    def __call__(self, states, actions) -> float:
        """R_sub of a single segment given as two equal-length sequences."""
        states = np.asarray(states, dtype=np.int64).reshape(1, -1)
        actions = np.asarray(actions, dtype=np.int64).reshape(1, -1)
        return self.segment_scores(states, actions, [states.shape[1]]).item()


@dataclass
class StepRewardModel:
    """Markovian proxy reward r(s, a) from a dense net over one-hot (s, a).

    With ``time_feature`` the normalised step index t/horizon is appended.
    """

    net: DenseNet
    n_states: int
    n_actions: int
    time_feature: bool = False
    horizon: int = 1

    @classmethod
    def create(
        cls,
        n_states: int,
        n_actions: int,
        hidden: tuple[int, ...] = (64, 64),
        rng: np.random.Generator | None = None,
        time_feature: bool = False,
        horizon: int = 1,
    ) -> "StepRewardModel":
        d = n_states + n_actions + int(time_feature)
        return cls(DenseNet.create(d, 1, hidden, rng=rng), n_states, n_actions, time_feature, horizon)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return self.net.parameters(prefix)

    def _inputs(self, states, actions, steps=None) -> np.ndarray:
        x = one_hot_pairs(states, actions, self.n_states, self.n_actions)
        if self.time_feature:
            t = np.zeros(np.shape(states)) if steps is None else np.asarray(steps, dtype=float)
            x = np.concatenate([x, (t / self.horizon)[..., None]], axis=-1)
        return x

    def __call__(self, states, actions, steps=None) -> Tensor:
        return self.net(self._inputs(states, actions, steps)).reshape(-1)

    def predict(self, states, actions, steps=None) -> np.ndarray:
        return self.net.predict(self._inputs(states, actions, steps)).reshape(np.shape(states))

    def table(self) -> np.ndarray:
        """r(s, a) for every pair: (S, A), or (T, S, A) with the time feature."""
        s, a = np.meshgrid(np.arange(self.n_states), np.arange(self.n_actions), indexing="ij")
        if not self.time_feature:
            return self.predict(s, a)
        return np.stack([self.predict(s, a, np.full(s.shape, t)) for t in range(self.horizon)])


@dataclass
class AdditivePsi:
    """Prefix score equal to the running sum of a fixed (S, A) table."""

    table: np.ndarray

    def prefix_values(self, states, actions, lengths) -> np.ndarray:
        states, actions = np.asarray(states), np.asarray(actions)
        valid = valid_mask(lengths, states.shape[1])
        r = np.where(valid, self.table[np.maximum(states, 0), np.maximum(actions, 0)], 0.0)
        return np.concatenate([np.zeros((len(states), 1)), np.cumsum(r, axis=1)], axis=1)


@dataclass
class ConstantPsi:
    """Every nonempty prefix scores ``value``."""

    value: float = 0.0

    def prefix_values(self, states, actions, lengths) -> np.ndarray:
        states = np.asarray(states)
        out = np.full((len(states), states.shape[1] + 1), float(self.value))
        out[:, 0] = 0.0
        out[np.asarray(lengths) == 0] = 0.0
        return out
