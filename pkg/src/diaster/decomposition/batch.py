from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..envs import Trajectory


@dataclass
class TrajectoryBatch:
    """Padded (s_t, a_t) pairs of several trajectories plus their returns."""

    states: np.ndarray  # (N, L), -1 padding
    actions: np.ndarray  # (N, L), -1 padding
    lengths: np.ndarray  # (N,)
    returns: np.ndarray  # (N,)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        self.returns = np.asarray(self.returns, dtype=np.float64)

    @classmethod
    def from_trajectories(cls, trajs: Sequence[Trajectory], width: int | None = None) -> "TrajectoryBatch":
        lengths = np.array([len(t) for t in trajs], dtype=np.int64)
        L = int(lengths.max(initial=0)) if width is None else width
        states = np.full((len(trajs), L), -1, dtype=np.int64)
        actions = np.full((len(trajs), L), -1, dtype=np.int64)
        returns = np.zeros(len(trajs))
        for i, t in enumerate(trajs):
            n = len(t)
            states[i, :n] = t.states[:n]
            actions[i, :n] = t.actions
            returns[i] = np.nan if t.episodic_return is None else t.episodic_return
        return cls(states, actions, lengths, returns)

    def __len__(self) -> int:
        return len(self.lengths)

    @property
    def width(self) -> int:
        return self.states.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return np.arange(self.width)[None, :] < self.lengths[:, None]

    def select(self, rows) -> "TrajectoryBatch":
        rows = np.asarray(rows)
        L = int(self.lengths[rows].max(initial=0))
        return TrajectoryBatch(self.states[rows, :L], self.actions[rows, :L], self.lengths[rows], self.returns[rows])
